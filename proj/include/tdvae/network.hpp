#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tdvae/kernels.hpp"

namespace tdvae {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2 };

std::string_view to_string(Activation a);

struct DenseLayer {
    Matrix weight;             // out x in
    std::vector<double> bias;  // out
    Activation activation = Activation::identity;

    std::size_t in_dim() const noexcept { return weight.cols; }
    std::size_t out_dim() const noexcept { return weight.rows; }
};

/// Parameter gradients, laid out like the network's layers.
struct NetworkGradients {
    std::vector<Matrix> weight;
    std::vector<std::vector<double>> bias;

    void zero();
    std::vector<std::span<double>> blocks();
};

/// Activations kept from a training forward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;   // input of each layer
    std::vector<Matrix> outputs;  // post-activation output of each layer
};

/// Fully connected network. Each layer computes act(x * W^T + b).
class DenseNetwork {
public:
    DenseNetwork() = default;
    explicit DenseNetwork(std::vector<DenseLayer> layers);

    /// Layers with widths input -> hidden... -> output. Hidden layers use
    /// `hidden`, the last layer uses `last`. Weights are drawn uniformly with
    /// He scaling in front of relu and Glorot scaling otherwise; biases start at zero.
    static DenseNetwork make(std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
                             Activation hidden_act, Activation last, std::uint64_t seed);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, ForwardCache& cache) const;

    /// Accumulates parameter gradients for d(loss)/d(output) = `grad_out`
    /// into `grads` and returns d(loss)/d(input).
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, NetworkGradients& grads) const;

    NetworkGradients make_gradients() const;

    /// W0, b0, W1, b1, ... in layer order.
    std::vector<std::span<double>> parameter_blocks();
    std::vector<std::span<const double>> parameter_blocks() const;

private:
    std::vector<DenseLayer> layers_;
};

} // namespace tdvae
