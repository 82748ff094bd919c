#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tdvae {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Holds first/second moment estimates for a
/// fixed list of parameter blocks.
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, std::span<const std::size_t> block_sizes);

    /// One update. `params` and `grads` must have the block sizes given at
    /// construction. Throws NumericError on a non-finite gradient, leaving
    /// the parameters untouched.
    void step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads);

    std::uint64_t steps() const noexcept { return step_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t step_ = 0;
};

} // namespace tdvae
