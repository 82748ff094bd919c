#pragma once

// Latent geometry of the torus VAE: points on S^1, the tensor-product
// embedding V(m_1..m_D) = [vec(m_1 (x) ... (x) m_D); m_1^0 .. m_D^0],
// its inverse, Gaussian sampling on the circle and the KL term.

#include <cstddef>
#include <span>
#include <vector>

namespace tdvae {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Reduces an angle modulo 2*pi into [0, 2*pi). Throws DomainError on non-finite input.
double canonical_angle(double theta);

/// Shortest distance between two angles on the circle, in [0, pi].
double circular_distance(double a, double b);

/// D angles, each canonicalized into [0, 2*pi) on construction.
class AngleVector {
public:
    AngleVector() = default;
    explicit AngleVector(std::vector<double> angles);

    std::size_t size() const noexcept { return angles_.size(); }
    double operator[](std::size_t a) const { return angles_[a]; }
    const std::vector<double>& values() const noexcept { return angles_; }

private:
    std::vector<double> angles_;
};

/// A point (m0, m1) = (cos, sin) on the unit circle.
struct CircleTuple {
    double m0 = 1.0;
    double m1 = 0.0;
};

/// Gaussian parameters of the two pre-normalization components of one circle.
struct CircleGaussian {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double sigma0 = 1.0;
    double sigma1 = 1.0;
};

/// Decoder input of the torus model. `prod` has 2^D entries, `orient` has D.
struct LatentEmbedding {
    std::vector<double> prod;
    std::vector<double> orient;

    std::size_t dim() const noexcept { return orient.size(); }
    /// [prod ; orient], length 2^D + D.
    std::vector<double> flat() const;
    static LatentEmbedding from_flat(std::span<const double> v, std::size_t dim);
};

/// Length of the flattened embedding for D circles.
constexpr std::size_t embedding_size(std::size_t dim) noexcept { return (std::size_t{1} << dim) + dim; }

CircleTuple make_circle_point(double theta);

/// Angle of a (not necessarily unit) tuple, in [0, 2*pi).
double angle_of(const CircleTuple& m);

/// Flattened outer product of the tuples. Entry (alpha_1..alpha_D) sits at
/// linear index sum_a alpha_a * 2^(D-a), so alpha_1 is the most significant bit.
std::vector<double> tensor_product(std::span<const CircleTuple> tuples);

LatentEmbedding embed(std::span<const CircleTuple> tuples);
LatentEmbedding embed(const AngleVector& angles);

/// Inverse of embed. Cosines come from `orient`; sine signs are resolved from
/// mode-a unfoldings of `prod`. When two or more circles have |cos| < 1e-6 only
/// the product of their sine signs is observable; the first such circle takes
/// the sign implied by `prod` and the others are set positive.
AngleVector recover_angles(const LatentEmbedding& emb);

/// raw / |raw|. Throws DegenerateInputError for the zero vector.
CircleTuple normalize_pair(double x, double y);

/// Reparameterized sample: normalize(mu + sigma * eps).
CircleTuple sample_circle(const CircleGaussian& params, double eps0, double eps1);

/// KL(N(mu, sigma^2) || N(0, 1)) summed over both components of every circle.
double gaussian_kl(std::span<const CircleGaussian> params);

/// KL of one scalar Gaussian component against N(0, 1).
double gaussian_kl_component(double mu, double sigma);

// Vector-Jacobian products used by the VAE backward pass.

/// Pulls a gradient on the flattened embedding [prod; orient] back to the tuples.
void embed_vjp(std::span<const CircleTuple> tuples, std::span<const double> grad_flat,
               std::span<CircleTuple> grad_tuples);

/// Pulls a gradient on normalize_pair(x, y) back to (x, y).
CircleTuple normalize_pair_vjp(double x, double y, const CircleTuple& grad_out);

} // namespace tdvae
