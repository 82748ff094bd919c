#include "tdvae/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::identity:
        return "identity";
    case Activation::relu:
        return "relu";
    case Activation::tanh:
        return "tanh";
    }
    return "unknown";
}

namespace {

void apply_activation(Activation act, Matrix& m) {
    switch (act) {
    case Activation::identity:
        break;
    case Activation::relu:
        for (double& v : m.data) {
            v = v > 0.0 ? v : 0.0;
        }
        break;
    case Activation::tanh:
        for (double& v : m.data) {
            v = std::tanh(v);
        }
        break;
    }
}

// Turns d/d(output) into d/d(pre-activation), in place.
void activation_backward(Activation act, const Matrix& output, Matrix& grad) {
    switch (act) {
    case Activation::identity:
        break;
    case Activation::relu:
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
            if (!(output.data[i] > 0.0)) {
                grad.data[i] = 0.0;
            }
        }
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < grad.data.size(); ++i) {
            const double y = output.data[i];
            grad.data[i] *= 1.0 - y * y;
        }
        break;
    }
}

} // namespace

void NetworkGradients::zero() {
    for (Matrix& w : weight) {
        std::fill(w.data.begin(), w.data.end(), 0.0);
    }
    for (auto& b : bias) {
        std::fill(b.begin(), b.end(), 0.0);
    }
}

std::vector<std::span<double>> NetworkGradients::blocks() {
    std::vector<std::span<double>> out;
    for (std::size_t l = 0; l < weight.size(); ++l) {
        out.emplace_back(weight[l].data);
        out.emplace_back(bias[l]);
    }
    return out;
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw ShapeError("network needs at least one layer");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.weight.rows == 0 || layer.weight.cols == 0 || layer.bias.size() != layer.weight.rows ||
            layer.weight.data.size() != layer.weight.rows * layer.weight.cols) {
            throw ShapeError("layer " + std::to_string(l) + " has inconsistent shapes");
        }
        if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
            throw ShapeError("layer " + std::to_string(l) + " input " + std::to_string(layer.in_dim()) +
                             " does not chain with previous output " + std::to_string(layers_[l - 1].out_dim()));
        }
    }
}

DenseNetwork DenseNetwork::make(std::size_t input, std::span<const std::size_t> hidden, std::size_t output,
                                Activation hidden_act, Activation last, std::uint64_t seed) {
    std::vector<std::size_t> widths{input};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(output);

    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        layer.activation = (l + 2 == widths.size()) ? last : hidden_act;
        layer.weight = Matrix(out, in);
        layer.bias.assign(out, 0.0);
        const double bound = layer.activation == Activation::relu
                                 ? std::sqrt(6.0 / static_cast<double>(in))
                                 : std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weight.data) {
            w = dist(rng);
        }
        layers.push_back(std::move(layer));
    }
    return DenseNetwork(std::move(layers));
}

std::size_t DenseNetwork::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }

std::size_t DenseNetwork::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers_) {
        n += l.weight.data.size() + l.bias.size();
    }
    return n;
}

Matrix DenseNetwork::forward(const Matrix& x) const {
    if (x.cols != input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(x.cols) + " columns, network expects " +
                         std::to_string(input_dim()));
    }
    Matrix cur = x;
    Matrix next;
    for (const DenseLayer& layer : layers_) {
        parallel::affine_forward(cur, layer.weight, layer.bias, next);
        apply_activation(layer.activation, next);
        std::swap(cur, next);
    }
    return cur;
}

Matrix DenseNetwork::forward(const Matrix& x, ForwardCache& cache) const {
    if (x.cols != input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(x.cols) + " columns, network expects " +
                         std::to_string(input_dim()));
    }
    cache.inputs.resize(layers_.size());
    cache.outputs.resize(layers_.size());
    const Matrix* cur = &x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        cache.inputs[l] = *cur;
        parallel::affine_forward(*cur, layers_[l].weight, layers_[l].bias, cache.outputs[l]);
        apply_activation(layers_[l].activation, cache.outputs[l]);
        cur = &cache.outputs[l];
    }
    return cache.outputs.back();
}

Matrix DenseNetwork::backward(const ForwardCache& cache, const Matrix& grad_out, NetworkGradients& grads) const {
    if (grad_out.cols != output_dim() || cache.outputs.size() != layers_.size() ||
        grad_out.rows != cache.outputs.back().rows) {
        throw ShapeError("backward: gradient does not match the cached forward pass");
    }
    Matrix grad = grad_out;
    Matrix grad_in;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        activation_backward(layers_[l].activation, cache.outputs[l], grad);
        parallel::affine_backward_params(grad, cache.inputs[l], grads.weight[l], grads.bias[l]);
        parallel::affine_backward_input(grad, layers_[l].weight, grad_in);
        std::swap(grad, grad_in);
    }
    return grad;
}

NetworkGradients DenseNetwork::make_gradients() const {
    NetworkGradients g;
    for (const DenseLayer& l : layers_) {
        g.weight.emplace_back(l.weight.rows, l.weight.cols);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

std::vector<std::span<double>> DenseNetwork::parameter_blocks() {
    std::vector<std::span<double>> out;
    for (DenseLayer& l : layers_) {
        out.emplace_back(l.weight.data);
        out.emplace_back(l.bias);
    }
    return out;
}

std::vector<std::span<const double>> DenseNetwork::parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (const DenseLayer& l : layers_) {
        out.emplace_back(l.weight.data);
        out.emplace_back(l.bias);
    }
    return out;
}

} // namespace tdvae
