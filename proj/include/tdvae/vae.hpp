#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "tdvae/network.hpp"
#include "tdvae/torus.hpp"

namespace tdvae {

enum class LatentMode : std::uint8_t { torus = 0, euclidean = 1 };

std::string_view to_string(LatentMode m);

/// Torus latent with `size` circles, or Euclidean latent with `size` dimensions.
struct LatentSpec {
    LatentMode mode = LatentMode::torus;
    std::size_t size = 4;

    /// Encoder width: [mu0, mu1, logvar0, logvar1] per circle, or [mu | logvar].
    std::size_t encoder_outputs() const noexcept { return mode == LatentMode::torus ? 4 * size : 2 * size; }
    /// Decoder width: 2^D + D, or L.
    std::size_t decoder_inputs() const noexcept {
        return mode == LatentMode::torus ? embedding_size(size) : size;
    }
    /// Standard-normal draws needed per sample.
    std::size_t noise_size() const noexcept { return mode == LatentMode::torus ? 2 * size : size; }
    /// Number of scalar codes handed to the metrics.
    std::size_t code_size() const noexcept { return size; }

    bool operator==(const LatentSpec&) const = default;
};

/// Posterior parameters for a batch. For the torus, columns 2a and 2a+1 hold
/// the two components of circle a; for the Euclidean latent, column j is
/// latent dimension j. sigma = exp(0.5 * logvar).
struct EncoderOutput {
    LatentSpec latent;
    Matrix mu;
    Matrix logvar;
    Matrix sigma;

    /// Circle parameters of one row (torus mode only).
    std::vector<CircleGaussian> circles(std::size_t row) const;
};

struct LossBreakdown {
    double loss = 0.0;            // reconstruction + beta * kl
    double reconstruction = 0.0;  // mean over the batch of the summed squared error
    double kl = 0.0;              // mean over the batch of the summed component KL
};

struct ElboResult {
    LossBreakdown value;
    NetworkGradients encoder_grads;
    NetworkGradients decoder_grads;
};

struct ModelShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> encoder_hidden{256, 128};
    std::vector<std::size_t> decoder_hidden{128, 256};
};

/// Encoder/decoder pair with either latent geometry. Inputs and reconstructions
/// live in [-1, 1]; the decoder ends in tanh.
class VaeModel {
public:
    VaeModel() = default;
    VaeModel(LatentSpec latent, DenseNetwork encoder, DenseNetwork decoder);

    static VaeModel make(LatentSpec latent, const ModelShape& shape, std::uint64_t seed);

    const LatentSpec& latent() const noexcept { return latent_; }
    const DenseNetwork& encoder() const noexcept { return encoder_; }
    const DenseNetwork& decoder() const noexcept { return decoder_; }
    DenseNetwork& encoder() noexcept { return encoder_; }
    DenseNetwork& decoder() noexcept { return decoder_; }
    std::size_t input_dim() const { return encoder_.input_dim(); }

    EncoderOutput encode(const Matrix& x) const;
    Matrix decode(const Matrix& latents) const;

    /// Noise-free decoder input: embed(normalize(mu)) on the torus, mu otherwise.
    Matrix mean_latent(const EncoderOutput& enc) const;

    /// Decoder input for a given reparameterization draw.
    Matrix sample_latent(const EncoderOutput& enc, const Matrix& noise) const;

    Matrix reconstruct(const Matrix& x) const;

    /// Codes for the metrics: recovered circle angles in [0, 2*pi) on the torus,
    /// posterior means otherwise. One row per sample.
    Matrix codes(const Matrix& x) const;

    /// Decodes the point of the torus with the given angles.
    std::vector<double> generate(const AngleVector& angles) const;

private:
    LatentSpec latent_;
    DenseNetwork encoder_;
    DenseNetwork decoder_;
};

/// Standard-normal reparameterization noise, one row per sample.
Matrix draw_noise(std::size_t rows, const LatentSpec& latent, std::mt19937_64& rng);

/// Loss only, for the given noise.
LossBreakdown elbo_value(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise);

/// Loss and all parameter gradients, for the given noise. The loss is
/// mean_b ( |G(V(M_b)) - x_b|^2 + beta * KL_b ). Throws NumericError if it is not finite.
ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, double beta, const Matrix& noise);

/// Mean squared error per element.
double mean_squared_error(const Matrix& a, const Matrix& b);

} // namespace tdvae
