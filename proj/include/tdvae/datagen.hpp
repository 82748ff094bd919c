#pragma once

// Procedural datasets with known generative factors: the 2dshapes raster
// generator and a smooth synthetic factor map, plus the TDDS1 file format.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdvae/kernels.hpp"

namespace tdvae {

enum class FactorKind : std::uint8_t { uniform_continuous = 0, uniform_angle = 1, categorical = 2 };

struct FactorDescriptor {
    std::string name;
    FactorKind kind = FactorKind::uniform_continuous;
    double lo = 0.0;               // continuous bounds; angles use [0, 2*pi)
    double hi = 1.0;
    std::uint32_t categories = 0;  // categorical only

    void validate() const;
    bool contains(double v) const;

    static FactorDescriptor continuous(std::string name, double lo, double hi);
    static FactorDescriptor angle(std::string name);
    static FactorDescriptor categorical(std::string name, std::uint32_t n);
};

using FactorSpec = std::vector<FactorDescriptor>;

/// shape (categorical 4: triangle, square, pentagon, hexagon), scale U[20, 40],
/// rotation U[0, 2*pi), red, green, blue U[0, 1].
FactorSpec shapes2d_spec();

nlohmann::json to_json(const FactorSpec& spec);
FactorSpec factor_spec_from_json(const nlohmann::json& j);

/// i.i.d. draws, one row per sample, categoricals as their index. Deterministic per seed.
Matrix sample_factors(const FactorSpec& spec, std::size_t count, std::uint64_t seed);

struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 3;
    std::vector<float> pixels;  // row-major, channel-interleaved, values in [0, 1]

    float at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
};

/// Filled regular n-gon (n = 3 + shape index) centred in the image, circumradius
/// scale * width / 64 pixels, rotated by the rotation factor, in the factor's
/// colour over white. A pixel is covered when its centre is inside the polygon
/// (even-odd rule); no anti-aliasing. `z` is one row of shapes2d_spec() factors.
RasterImage render_2dshape(std::span<const double> z, std::size_t width, std::size_t height);

/// Binary PPM (P6, maxval 255); channel values are scaled and rounded half-up.
std::vector<std::uint8_t> encode_ppm(const RasterImage& image);

/// A dataset of flattened samples with their factors.
struct Dataset {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    FactorSpec spec;
    Matrix factors;             // N x K
    std::vector<float> pixels;  // N x (width * height * channels), values in [0, 1]

    std::size_t size() const noexcept { return factors.rows; }
    std::size_t sample_dim() const noexcept { return std::size_t{width} * height * channels; }

    /// Throws ShapeError when the parts disagree.
    void validate() const;
    RasterImage image(std::size_t i) const;
};

/// Samples only, rescaled from [0, 1] to [-1, 1]. This is all that training sees.
Matrix training_samples(const Dataset& ds);

/// 2dshapes at the given resolution; rendering runs in parallel.
Dataset make_shapes_dataset(std::size_t count, std::size_t width, std::size_t height, std::uint64_t seed);

struct SyntheticOptions {
    std::size_t num_continuous = 0;  // the last factors are U[-1, 1] instead of angles
    double noise = 0.0;              // stddev of additive Gaussian noise
    std::size_t output_dim = 16;
};

/// Factor spec of the synthetic map: angular factors first, then continuous ones.
FactorSpec synthetic_spec(std::size_t k, const SyntheticOptions& options = {});

/// Fixed, seeded two-layer tanh map from factor features to [0, 1]^output_dim.
/// Angular factors enter through (cos z, sin z), continuous ones directly.
class SyntheticMap {
public:
    SyntheticMap(const FactorSpec& spec, std::size_t output_dim, std::uint64_t seed);

    std::vector<double> operator()(std::span<const double> z) const;
    std::size_t output_dim() const noexcept { return w2_.rows; }

private:
    FactorSpec spec_;
    Matrix w1_;
    std::vector<double> b1_;
    Matrix w2_;
    std::vector<double> b2_;
};

/// K <= 8 factors, N samples of dimension options.output_dim (stored as width x 1 x 1).
Dataset synthetic_map_dataset(std::size_t k, std::size_t n, std::uint64_t seed, const SyntheticOptions& options = {});

// TDDS1 layout (little-endian):
//   "TDDS1", u64 N, u32 width, u32 height, u32 channels, u32 K
//   K factor descriptors: u32 name length, name bytes, u8 kind, f64 lo, f64 hi, u32 categories
//   N records: K f64 factor values, then width*height*channels f32 samples
std::vector<std::uint8_t> serialize_dataset(const Dataset& ds);
Dataset deserialize_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace tdvae
