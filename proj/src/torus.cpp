#include "tdvae/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

namespace {

constexpr double kZeroCosine = 1e-6;
constexpr double kConsistencyTol = 1e-5;

std::size_t bit_of(std::size_t a, std::size_t dim) { return std::size_t{1} << (dim - 1 - a); }

double component(const CircleTuple& m, bool one) { return one ? m.m1 : m.m0; }

} // namespace

double canonical_angle(double theta) {
    if (!std::isfinite(theta)) {
        throw DomainError("angle is not finite");
    }
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    // fmod of a tiny negative value can round up to exactly 2*pi.
    if (r >= kTwoPi) {
        r = 0.0;
    }
    return r;
}

double circular_distance(double a, double b) {
    const double d = std::fabs(canonical_angle(a) - canonical_angle(b));
    return std::min(d, kTwoPi - d);
}

AngleVector::AngleVector(std::vector<double> angles) : angles_(std::move(angles)) {
    for (double& t : angles_) {
        t = canonical_angle(t);
    }
}

std::vector<double> LatentEmbedding::flat() const {
    std::vector<double> v;
    v.reserve(prod.size() + orient.size());
    v.insert(v.end(), prod.begin(), prod.end());
    v.insert(v.end(), orient.begin(), orient.end());
    return v;
}

LatentEmbedding LatentEmbedding::from_flat(std::span<const double> v, std::size_t dim) {
    if (dim == 0 || v.size() != embedding_size(dim)) {
        throw ShapeError("embedding length " + std::to_string(v.size()) + " does not match D = " +
                         std::to_string(dim));
    }
    const std::size_t n = std::size_t{1} << dim;
    LatentEmbedding e;
    e.prod.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
    e.orient.assign(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
    return e;
}

CircleTuple make_circle_point(double theta) {
    if (!std::isfinite(theta)) {
        throw DomainError("make_circle_point: angle is not finite");
    }
    const double t = canonical_angle(theta);
    return {std::cos(t), std::sin(t)};
}

double angle_of(const CircleTuple& m) { return canonical_angle(std::atan2(m.m1, m.m0)); }

std::vector<double> tensor_product(std::span<const CircleTuple> tuples) {
    const std::size_t dim = tuples.size();
    if (dim == 0) {
        throw DomainError("tensor_product: need at least one circle");
    }
    if (dim > 30) {
        throw DomainError("tensor_product: D too large");
    }
    // Grow the product one factor at a time; appending a factor makes it the
    // least significant bit, which keeps alpha_1 most significant.
    std::vector<double> out{1.0};
    out.reserve(std::size_t{1} << dim);
    for (const CircleTuple& m : tuples) {
        std::vector<double> next(out.size() * 2);
        for (std::size_t i = 0; i < out.size(); ++i) {
            next[2 * i] = out[i] * m.m0;
            next[2 * i + 1] = out[i] * m.m1;
        }
        out = std::move(next);
    }
    return out;
}

LatentEmbedding embed(std::span<const CircleTuple> tuples) {
    LatentEmbedding e;
    e.prod = tensor_product(tuples);
    e.orient.reserve(tuples.size());
    for (const CircleTuple& m : tuples) {
        e.orient.push_back(m.m0);
    }
    return e;
}

LatentEmbedding embed(const AngleVector& angles) {
    std::vector<CircleTuple> tuples;
    tuples.reserve(angles.size());
    for (double t : angles.values()) {
        tuples.push_back(make_circle_point(t));
    }
    return embed(tuples);
}

AngleVector recover_angles(const LatentEmbedding& emb) {
    const std::size_t dim = emb.dim();
    if (dim == 0) {
        throw DomainError("recover_angles: empty embedding");
    }
    const std::size_t n = std::size_t{1} << dim;
    if (emb.prod.size() != n) {
        throw ShapeError("recover_angles: prod has " + std::to_string(emb.prod.size()) +
                         " entries, expected " + std::to_string(n));
    }
    for (double x : emb.prod) {
        if (!std::isfinite(x)) {
            throw ReconstructionError("recover_angles: non-finite embedding entry");
        }
    }

    std::vector<CircleTuple> tuples(dim);
    std::vector<std::size_t> near_zero;

    for (std::size_t a = 0; a < dim; ++a) {
        const double c = std::clamp(emb.orient[a], -1.0, 1.0);
        if (!std::isfinite(emb.orient[a])) {
            throw ReconstructionError("recover_angles: non-finite orientation entry");
        }
        if (std::fabs(c) < kZeroCosine) {
            near_zero.push_back(a);
            tuples[a] = {c, std::sqrt(1.0 - c * c)};
            continue;
        }
        // Mode-a unfolding: row 0 = m_a^0 * w, row 1 = m_a^1 * w. The column with
        // the largest |w| gives the direction of m_a up to the sign of w.
        const std::size_t bit = bit_of(a, dim);
        double best = -1.0;
        double r0 = 0.0;
        double r1 = 0.0;
        for (std::size_t idx = 0; idx < n; ++idx) {
            if (idx & bit) {
                continue;
            }
            const double x0 = emb.prod[idx];
            const double x1 = emb.prod[idx | bit];
            const double mag = std::fabs(x0) + std::fabs(x1);
            if (mag > best) {
                best = mag;
                r0 = x0;
                r1 = x1;
            }
        }
        if (best <= 0.0) {
            throw ReconstructionError("recover_angles: product tensor is zero");
        }
        // sign(w) is fixed by requiring the cosine to agree with the orientation entry.
        if ((r0 < 0.0) != (c < 0.0)) {
            r0 = -r0;
            r1 = -r1;
        }
        const double norm = std::hypot(r0, r1);
        tuples[a] = {r0 / norm, r1 / norm};
    }

    if (!near_zero.empty()) {
        // Only the product of the sine signs in this set is observable. Fix the
        // first from the largest prod entry with all its bits set to 1.
        const std::size_t first = near_zero.front();
        std::size_t zero_mask = 0;
        for (std::size_t a : near_zero) {
            zero_mask |= bit_of(a, dim);
        }
        double best = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t idx = 0; idx < n; ++idx) {
            if ((idx & zero_mask) != zero_mask) {
                continue;
            }
            if (std::fabs(emb.prod[idx]) > best) {
                best = std::fabs(emb.prod[idx]);
                best_idx = idx;
            }
        }
        double predicted = 1.0;
        for (std::size_t b = 0; b < dim; ++b) {
            if (b != first) {
                predicted *= component(tuples[b], (best_idx & bit_of(b, dim)) != 0);
            }
        }
        if (emb.prod[best_idx] * predicted < 0.0) {
            tuples[first].m1 = -tuples[first].m1;
        }
    }

    // The recovered point has to reproduce the input.
    const LatentEmbedding check = embed(tuples);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        err = std::max(err, std::fabs(check.prod[i] - emb.prod[i]));
    }
    for (std::size_t a = 0; a < dim; ++a) {
        err = std::max(err, std::fabs(check.orient[a] - emb.orient[a]));
    }
    if (err > kConsistencyTol) {
        throw ReconstructionError("recover_angles: embedding is not a rank-1 product of unit tuples (residual " +
                                  std::to_string(err) + ")");
    }

    std::vector<double> angles(dim);
    for (std::size_t a = 0; a < dim; ++a) {
        angles[a] = angle_of(tuples[a]);
    }
    return AngleVector(std::move(angles));
}

CircleTuple normalize_pair(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw DomainError("normalize_pair: non-finite input");
    }
    const double n = std::hypot(x, y);
    if (n == 0.0) {
        throw DegenerateInputError("normalize_pair: zero vector has no direction");
    }
    return {x / n, y / n};
}

CircleTuple sample_circle(const CircleGaussian& p, double eps0, double eps1) {
    if (!(p.sigma0 > 0.0) || !(p.sigma1 > 0.0)) {
        throw DomainError("sample_circle: sigma must be positive");
    }
    return normalize_pair(p.mu0 + p.sigma0 * eps0, p.mu1 + p.sigma1 * eps1);
}

double gaussian_kl_component(double mu, double sigma) {
    if (!(sigma > 0.0)) {
        throw DomainError("gaussian_kl: sigma must be positive");
    }
    const double s2 = sigma * sigma;
    return 0.5 * (s2 + mu * mu - 1.0 - std::log(s2));
}

double gaussian_kl(std::span<const CircleGaussian> params) {
    double kl = 0.0;
    for (const CircleGaussian& p : params) {
        kl += gaussian_kl_component(p.mu0, p.sigma0) + gaussian_kl_component(p.mu1, p.sigma1);
    }
    return kl;
}

void embed_vjp(std::span<const CircleTuple> tuples, std::span<const double> grad_flat,
               std::span<CircleTuple> grad_tuples) {
    const std::size_t dim = tuples.size();
    const std::size_t n = std::size_t{1} << dim;
    if (grad_flat.size() != n + dim || grad_tuples.size() != dim) {
        throw ShapeError("embed_vjp: gradient size mismatch");
    }
    for (CircleTuple& g : grad_tuples) {
        g = {0.0, 0.0};
    }
    std::vector<double> prefix(dim + 1);
    std::vector<double> suffix(dim + 1);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double g = grad_flat[idx];
        if (g == 0.0) {
            continue;
        }
        prefix[0] = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            prefix[a + 1] = prefix[a] * component(tuples[a], (idx & bit_of(a, dim)) != 0);
        }
        suffix[dim] = 1.0;
        for (std::size_t a = dim; a-- > 0;) {
            suffix[a] = suffix[a + 1] * component(tuples[a], (idx & bit_of(a, dim)) != 0);
        }
        for (std::size_t a = 0; a < dim; ++a) {
            const double others = prefix[a] * suffix[a + 1];
            if (idx & bit_of(a, dim)) {
                grad_tuples[a].m1 += g * others;
            } else {
                grad_tuples[a].m0 += g * others;
            }
        }
    }
    for (std::size_t a = 0; a < dim; ++a) {
        grad_tuples[a].m0 += grad_flat[n + a];
    }
}

CircleTuple normalize_pair_vjp(double x, double y, const CircleTuple& grad_out) {
    const double n = std::hypot(x, y);
    if (n == 0.0) {
        throw DegenerateInputError("normalize_pair_vjp: zero vector");
    }
    const double m0 = x / n;
    const double m1 = y / n;
    const double dot = m0 * grad_out.m0 + m1 * grad_out.m1;
    return {(grad_out.m0 - m0 * dot) / n, (grad_out.m1 - m1 * dot) / n};
}

} // namespace tdvae
