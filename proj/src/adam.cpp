#include "tdvae/adam.hpp"

#include <cmath>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

Adam::Adam(AdamConfig config, std::span<const std::size_t> block_sizes) : config_(config) {
    if (!(config.learning_rate > 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.epsilon > 0.0)) {
        throw ConfigError("adam: invalid hyperparameters");
    }
    for (std::size_t n : block_sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void Adam::step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ShapeError("adam: expected " + std::to_string(m_.size()) + " parameter blocks");
    }
    for (std::size_t b = 0; b < m_.size(); ++b) {
        if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
            throw ShapeError("adam: block " + std::to_string(b) + " has the wrong size");
        }
        for (double g : grads[b]) {
            if (!std::isfinite(g)) {
                throw NumericError("adam: non-finite gradient in block " + std::to_string(b));
            }
        }
    }

    ++step_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const double lr = config_.learning_rate;
    const double eps = config_.epsilon;

    for (std::size_t b = 0; b < m_.size(); ++b) {
        double* p = params[b].data();
        const double* g = grads[b].data();
        double* m = m_[b].data();
        double* v = v_[b].data();
        const std::size_t n = m_[b].size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

} // namespace tdvae
