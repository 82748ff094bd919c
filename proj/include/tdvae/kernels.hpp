#pragma once

// Dense row-major matrix kernels used by the network engine.
//
// Every kernel comes in two flavours: `serial::` is the straightforward
// reference kept for testing, `parallel::` splits the output rows across
// OpenMP threads. Each output element is accumulated by one thread in a fixed
// order, so parallel results do not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace tdvae {

/// Row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        data.assign(r * c, 0.0);
    }
};

namespace serial {

/// out = x * w^T + bias   (x: B x in, w: out x in, bias: out)
void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& out);

/// grad_w += dy^T * x, grad_b += column sums of dy
void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& grad_w, std::span<double> grad_b);

/// dx = dy * w
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);

} // namespace serial

namespace parallel {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& out);
void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& grad_w, std::span<double> grad_b);
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);

} // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int kernel_threads();

/// Sets the thread count for parallel kernels launched from the calling thread.
void set_kernel_threads(int n);

} // namespace tdvae
