#include "tdvae/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tdvae/binary_io.hpp"
#include "tdvae/error.hpp"
#include "tdvae/torus.hpp"

namespace tdvae {

namespace {

constexpr std::string_view kDatasetMagic = "TDDS1";

// Factor columns of shapes2d_spec().
enum ShapeFactor : std::size_t { kShape = 0, kScale, kRotation, kRed, kGreen, kBlue, kShapeFactors };

struct Point {
    double x;
    double y;
};

bool inside_polygon(std::span<const Point> poly, double px, double py) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y > py) != (b.y > py)) {
            const double x_cross = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
            if (px < x_cross) {
                inside = !inside;
            }
        }
    }
    return inside;
}

} // namespace

void FactorDescriptor::validate() const {
    switch (kind) {
    case FactorKind::uniform_continuous:
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw ConfigError("factor '" + name + "': need finite lo < hi");
        }
        break;
    case FactorKind::uniform_angle:
        break;
    case FactorKind::categorical:
        if (categories < 2) {
            throw ConfigError("factor '" + name + "': categorical needs at least 2 categories");
        }
        break;
    default:
        throw ConfigError("factor '" + name + "': unknown kind");
    }
}

bool FactorDescriptor::contains(double v) const {
    switch (kind) {
    case FactorKind::uniform_continuous:
        return v >= lo && v <= hi;
    case FactorKind::uniform_angle:
        return v >= 0.0 && v < kTwoPi;
    case FactorKind::categorical:
        return v >= 0.0 && v < static_cast<double>(categories) && v == std::floor(v);
    }
    return false;
}

FactorDescriptor FactorDescriptor::continuous(std::string name, double lo, double hi) {
    return {std::move(name), FactorKind::uniform_continuous, lo, hi, 0};
}

FactorDescriptor FactorDescriptor::angle(std::string name) {
    return {std::move(name), FactorKind::uniform_angle, 0.0, kTwoPi, 0};
}

FactorDescriptor FactorDescriptor::categorical(std::string name, std::uint32_t n) {
    return {std::move(name), FactorKind::categorical, 0.0, static_cast<double>(n), n};
}

FactorSpec shapes2d_spec() {
    return {
        FactorDescriptor::categorical("shape", 4),
        FactorDescriptor::continuous("scale", 20.0, 40.0),
        FactorDescriptor::angle("rotation"),
        FactorDescriptor::continuous("red", 0.0, 1.0),
        FactorDescriptor::continuous("green", 0.0, 1.0),
        FactorDescriptor::continuous("blue", 0.0, 1.0),
    };
}

nlohmann::json to_json(const FactorSpec& spec) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FactorDescriptor& f : spec) {
        nlohmann::json j{{"name", f.name}};
        switch (f.kind) {
        case FactorKind::uniform_continuous:
            j["kind"] = "uniform";
            j["lo"] = f.lo;
            j["hi"] = f.hi;
            break;
        case FactorKind::uniform_angle:
            j["kind"] = "angle";
            break;
        case FactorKind::categorical:
            j["kind"] = "categorical";
            j["categories"] = f.categories;
            break;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

FactorSpec factor_spec_from_json(const nlohmann::json& j) {
    FactorSpec spec;
    for (const auto& f : j) {
        const std::string kind = f.at("kind").get<std::string>();
        const std::string name = f.value("name", "");
        if (kind == "uniform") {
            spec.push_back(FactorDescriptor::continuous(name, f.at("lo").get<double>(), f.at("hi").get<double>()));
        } else if (kind == "angle") {
            spec.push_back(FactorDescriptor::angle(name));
        } else if (kind == "categorical") {
            spec.push_back(FactorDescriptor::categorical(name, f.at("categories").get<std::uint32_t>()));
        } else {
            throw ConfigError("unknown factor kind '" + kind + "'");
        }
        spec.back().validate();
    }
    return spec;
}

Matrix sample_factors(const FactorSpec& spec, std::size_t count, std::uint64_t seed) {
    for (const FactorDescriptor& f : spec) {
        f.validate();
    }
    std::mt19937_64 rng(seed);
    Matrix out(count, spec.size());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < spec.size(); ++j) {
            const FactorDescriptor& f = spec[j];
            double v = 0.0;
            switch (f.kind) {
            case FactorKind::uniform_continuous:
                v = std::uniform_real_distribution<double>(f.lo, f.hi)(rng);
                break;
            case FactorKind::uniform_angle:
                v = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
                break;
            case FactorKind::categorical:
                v = static_cast<double>(std::uniform_int_distribution<std::uint32_t>(0, f.categories - 1)(rng));
                break;
            }
            out(i, j) = v;
        }
    }
    return out;
}

RasterImage render_2dshape(std::span<const double> z, std::size_t width, std::size_t height) {
    if (z.size() != kShapeFactors) {
        throw DomainError("render_2dshape: expected " + std::to_string(kShapeFactors) + " factors, got " +
                          std::to_string(z.size()));
    }
    if (width < 8 || height < 8) {
        throw DomainError("render_2dshape: image must be at least 8x8");
    }
    const FactorSpec spec = shapes2d_spec();
    for (std::size_t j = 0; j < kShapeFactors; ++j) {
        if (j == kRotation) {
            if (!std::isfinite(z[j])) {
                throw DomainError("render_2dshape: rotation is not finite");
            }
        } else if (!spec[j].contains(z[j])) {
            throw DomainError("render_2dshape: factor '" + spec[j].name + "' = " + std::to_string(z[j]) +
                              " is outside its support");
        }
    }

    const auto sides = static_cast<std::size_t>(z[kShape]) + 3;
    const double period = kTwoPi / static_cast<double>(sides);
    // Rotations differing by a multiple of the symmetry period give the same
    // polygon; reduce the phase and snap it to a fine grid so they rasterize identically.
    double phase = std::fmod(canonical_angle(z[kRotation]), period);
    phase = std::round(phase * 1e12) / 1e12;
    const double radius = z[kScale] * static_cast<double>(width) / 64.0;
    const double cx = static_cast<double>(width) / 2.0;
    const double cy = static_cast<double>(height) / 2.0;

    std::vector<Point> poly(sides);
    for (std::size_t k = 0; k < sides; ++k) {
        const double t = phase + period * static_cast<double>(k);
        poly[k] = {cx + radius * std::cos(t), cy + radius * std::sin(t)};
    }

    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = 3;
    img.pixels.assign(width * height * 3, 1.0f);
    const float color[3] = {static_cast<float>(z[kRed]), static_cast<float>(z[kGreen]), static_cast<float>(z[kBlue])};
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            if (inside_polygon(poly, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
                float* px = img.pixels.data() + (y * width + x) * 3;
                for (int c = 0; c < 3; ++c) {
                    px[c] = std::clamp(color[c], 0.0f, 1.0f);
                }
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw ShapeError("encode_ppm: need 1 or 3 channels");
    }
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + image.width * image.height * 3);
    for (std::size_t p = 0; p < image.width * image.height; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            const float v = image.pixels[p * image.channels + (image.channels == 1 ? 0 : c)];
            const double scaled = std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0;
            out.push_back(static_cast<std::uint8_t>(std::floor(scaled + 0.5)));
        }
    }
    return out;
}

void Dataset::validate() const {
    if (factors.cols != spec.size()) {
        throw ShapeError("dataset: factor columns do not match the factor spec");
    }
    if (pixels.size() != size() * sample_dim()) {
        throw ShapeError("dataset: sample payload does not match N * sample size");
    }
    if (sample_dim() == 0) {
        throw ShapeError("dataset: empty sample dimension");
    }
}

RasterImage Dataset::image(std::size_t i) const {
    if (i >= size()) {
        throw ShapeError("dataset: sample index out of range");
    }
    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    const std::size_t d = sample_dim();
    img.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(i * d),
                      pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return img;
}

Matrix training_samples(const Dataset& ds) {
    ds.validate();
    Matrix out(ds.size(), ds.sample_dim());
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = 2.0 * static_cast<double>(ds.pixels[i]) - 1.0;
    }
    return out;
}

Dataset make_shapes_dataset(std::size_t count, std::size_t width, std::size_t height, std::uint64_t seed) {
    if (width < 8 || height < 8) {
        throw ConfigError("shapes dataset: resolution must be at least 8x8");
    }
    Dataset ds;
    ds.width = static_cast<std::uint32_t>(width);
    ds.height = static_cast<std::uint32_t>(height);
    ds.channels = 3;
    ds.spec = shapes2d_spec();
    ds.factors = sample_factors(ds.spec, count, seed);
    const std::size_t d = ds.sample_dim();
    ds.pixels.assign(count * d, 0.0f);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(count); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const RasterImage img = render_2dshape(ds.factors.row(i), width, height);
        std::copy(img.pixels.begin(), img.pixels.end(), ds.pixels.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return ds;
}

FactorSpec synthetic_spec(std::size_t k, const SyntheticOptions& options) {
    if (k == 0 || k > 8) {
        throw ConfigError("synthetic dataset supports 1..8 factors, got " + std::to_string(k));
    }
    if (options.num_continuous > k) {
        throw ConfigError("synthetic dataset: more continuous factors than factors");
    }
    FactorSpec spec;
    for (std::size_t j = 0; j < k; ++j) {
        if (j < k - options.num_continuous) {
            spec.push_back(FactorDescriptor::angle("angle_" + std::to_string(j)));
        } else {
            spec.push_back(FactorDescriptor::continuous("linear_" + std::to_string(j), -1.0, 1.0));
        }
    }
    return spec;
}

SyntheticMap::SyntheticMap(const FactorSpec& spec, std::size_t output_dim, std::uint64_t seed) : spec_(spec) {
    constexpr std::size_t kHidden = 32;
    std::size_t features = 0;
    for (const FactorDescriptor& f : spec_) {
        features += f.kind == FactorKind::uniform_angle ? 2 : 1;
    }
    if (features == 0 || output_dim == 0) {
        throw ConfigError("synthetic map: empty input or output");
    }
    std::mt19937_64 rng(seed ^ 0x5eedf00dcafe1234ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double g1 = 1.5 / std::sqrt(static_cast<double>(features));
    const double g2 = 2.0 / std::sqrt(static_cast<double>(kHidden));
    w1_ = Matrix(kHidden, features);
    for (double& w : w1_.data) {
        w = g1 * normal(rng);
    }
    b1_.resize(kHidden);
    for (double& b : b1_) {
        b = 0.3 * normal(rng);
    }
    w2_ = Matrix(output_dim, kHidden);
    for (double& w : w2_.data) {
        w = g2 * normal(rng);
    }
    b2_.resize(output_dim);
    for (double& b : b2_) {
        b = 0.3 * normal(rng);
    }
}

std::vector<double> SyntheticMap::operator()(std::span<const double> z) const {
    if (z.size() != spec_.size()) {
        throw ShapeError("synthetic map: wrong number of factors");
    }
    std::vector<double> f;
    f.reserve(w1_.cols);
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (spec_[j].kind == FactorKind::uniform_angle) {
            f.push_back(std::cos(z[j]));
            f.push_back(std::sin(z[j]));
        } else {
            f.push_back(z[j]);
        }
    }
    std::vector<double> h(w1_.rows);
    for (std::size_t o = 0; o < w1_.rows; ++o) {
        double s = b1_[o];
        for (std::size_t k = 0; k < f.size(); ++k) {
            s += w1_(o, k) * f[k];
        }
        h[o] = std::tanh(s);
    }
    std::vector<double> x(w2_.rows);
    for (std::size_t o = 0; o < w2_.rows; ++o) {
        double s = b2_[o];
        for (std::size_t k = 0; k < h.size(); ++k) {
            s += w2_(o, k) * h[k];
        }
        x[o] = 0.5 + 0.5 * std::tanh(s);
    }
    return x;
}

Dataset synthetic_map_dataset(std::size_t k, std::size_t n, std::uint64_t seed, const SyntheticOptions& options) {
    Dataset ds;
    ds.spec = synthetic_spec(k, options);
    ds.width = static_cast<std::uint32_t>(options.output_dim);
    ds.height = 1;
    ds.channels = 1;
    ds.factors = sample_factors(ds.spec, n, seed);
    const SyntheticMap map(ds.spec, options.output_dim, seed);
    std::mt19937_64 noise_rng(seed ^ 0x0badc0ffee0ddf00ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    ds.pixels.reserve(n * options.output_dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (double v : map(ds.factors.row(i))) {
            if (options.noise > 0.0) {
                v = std::clamp(v + options.noise * normal(noise_rng), 0.0, 1.0);
            }
            ds.pixels.push_back(static_cast<float>(v));
        }
    }
    return ds;
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
    ds.validate();
    ByteWriter w;
    w.bytes(kDatasetMagic);
    w.u64(ds.size());
    w.u32(ds.width);
    w.u32(ds.height);
    w.u32(ds.channels);
    w.u32(static_cast<std::uint32_t>(ds.spec.size()));
    for (const FactorDescriptor& f : ds.spec) {
        w.u32(static_cast<std::uint32_t>(f.name.size()));
        w.bytes(f.name);
        w.u8(static_cast<std::uint8_t>(f.kind));
        w.f64(f.lo);
        w.f64(f.hi);
        w.u32(f.categories);
    }
    const std::size_t d = ds.sample_dim();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.factors.row(i)) {
            w.f64(v);
        }
        for (std::size_t p = 0; p < d; ++p) {
            w.f32(ds.pixels[i * d + p]);
        }
    }
    return w.buffer();
}

Dataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.remaining() < kDatasetMagic.size() || r.bytes(kDatasetMagic.size()) != kDatasetMagic) {
        throw ParseError("dataset: bad magic, expected TDDS1");
    }
    Dataset ds;
    const std::uint64_t n = r.u64();
    ds.width = r.u32();
    ds.height = r.u32();
    ds.channels = r.u32();
    const std::uint32_t k = r.u32();
    if (ds.width == 0 || ds.height == 0 || ds.channels == 0 || k == 0 || k > 1024) {
        throw ParseError("dataset: implausible header");
    }
    for (std::uint32_t j = 0; j < k; ++j) {
        const std::uint32_t len = r.u32();
        if (len > 4096) {
            throw ParseError("dataset: implausible factor name length");
        }
        FactorDescriptor f;
        f.name = r.bytes(len);
        const std::uint8_t kind = r.u8();
        if (kind > static_cast<std::uint8_t>(FactorKind::categorical)) {
            throw ParseError("dataset: unknown factor kind " + std::to_string(kind));
        }
        f.kind = static_cast<FactorKind>(kind);
        f.lo = r.f64();
        f.hi = r.f64();
        f.categories = r.u32();
        try {
            f.validate();
        } catch (const ConfigError& e) {
            throw ParseError(std::string("dataset: ") + e.what());
        }
        ds.spec.push_back(std::move(f));
    }
    const std::size_t d = ds.sample_dim();
    const std::size_t record = k * 8 + d * 4;
    if (record == 0 || r.remaining() % record != 0 || r.remaining() / record != n) {
        throw ParseError("dataset: header announces " + std::to_string(n) + " records but the payload holds " +
                         std::to_string(r.remaining()) + " bytes (" + std::to_string(record) + " per record)");
    }
    ds.factors = Matrix(n, k);
    ds.pixels.resize(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            ds.factors(i, j) = r.f64();
        }
        for (std::size_t p = 0; p < d; ++p) {
            ds.pixels[i * d + p] = r.f32();
        }
    }
    return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    write_file_atomic(path, serialize_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    try {
        return deserialize_dataset(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace tdvae
