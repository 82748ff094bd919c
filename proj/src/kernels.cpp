#include "tdvae/kernels.hpp"

#include <string>

#include "tdvae/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdvae {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_affine(const Matrix& x, const Matrix& w, std::size_t bias_size) {
    if (x.cols != w.cols || bias_size != w.rows) {
        throw ShapeError("affine: input has " + std::to_string(x.cols) + " columns, weight is " +
                         std::to_string(w.rows) + "x" + std::to_string(w.cols));
    }
}

void check_backward(const Matrix& dy, const Matrix& x, const Matrix& grad_w, std::size_t grad_b_size) {
    if (dy.rows != x.rows || grad_w.rows != dy.cols || grad_w.cols != x.cols || grad_b_size != dy.cols) {
        throw ShapeError("affine backward: shape mismatch");
    }
}

} // namespace

namespace serial {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& out) {
    check_affine(x, w, bias.size());
    out.resize(x.rows, w.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t o = 0; o < w.rows; ++o) {
            double s = bias[o];
            for (std::size_t k = 0; k < x.cols; ++k) {
                s += x(i, k) * w(o, k);
            }
            out(i, o) = s;
        }
    }
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& grad_w, std::span<double> grad_b) {
    check_backward(dy, x, grad_w, grad_b.size());
    for (std::size_t o = 0; o < dy.cols; ++o) {
        for (std::size_t i = 0; i < dy.rows; ++i) {
            const double g = dy(i, o);
            grad_b[o] += g;
            for (std::size_t k = 0; k < x.cols; ++k) {
                grad_w(o, k) += g * x(i, k);
            }
        }
    }
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    if (dy.cols != w.rows) {
        throw ShapeError("affine backward input: shape mismatch");
    }
    dx.resize(dy.rows, w.cols);
    for (std::size_t i = 0; i < dy.rows; ++i) {
        for (std::size_t k = 0; k < w.cols; ++k) {
            double s = 0.0;
            for (std::size_t o = 0; o < w.rows; ++o) {
                s += dy(i, o) * w(o, k);
            }
            dx(i, k) = s;
        }
    }
}

} // namespace serial

namespace parallel {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& out) {
    check_affine(x, w, bias.size());
    const std::size_t rows = x.rows;
    const std::size_t in = w.cols;
    const std::size_t outs = w.rows;
    out.resize(rows, outs);

    // w^T so the inner loop runs contiguously over the outputs.
    std::vector<double> wt(in * outs);
    for (std::size_t o = 0; o < outs; ++o) {
        for (std::size_t k = 0; k < in; ++k) {
            wt[k * outs + o] = w.data[o * in + k];
        }
    }
    const double* xp = x.data.data();
    const double* wtp = wt.data();
    const double* bp = bias.data();
    double* op = out.data.data();
    const bool go_parallel = rows * in * outs >= kParallelWork;

#pragma omp parallel for schedule(static) if (go_parallel)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* orow = op + i * outs;
        for (std::size_t o = 0; o < outs; ++o) {
            orow[o] = bp[o];
        }
        const double* xrow = xp + i * in;
        for (std::size_t k = 0; k < in; ++k) {
            const double xv = xrow[k];
            const double* wrow = wtp + k * outs;
            for (std::size_t o = 0; o < outs; ++o) {
                orow[o] += xv * wrow[o];
            }
        }
    }
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& grad_w, std::span<double> grad_b) {
    check_backward(dy, x, grad_w, grad_b.size());
    const std::size_t rows = dy.rows;
    const std::size_t outs = dy.cols;
    const std::size_t in = x.cols;
    const double* dyp = dy.data.data();
    const double* xp = x.data.data();
    double* gwp = grad_w.data.data();
    double* gbp = grad_b.data();
    const bool go_parallel = rows * in * outs >= kParallelWork;

#pragma omp parallel for schedule(static) if (go_parallel)
    for (std::ptrdiff_t oo = 0; oo < static_cast<std::ptrdiff_t>(outs); ++oo) {
        const std::size_t o = static_cast<std::size_t>(oo);
        double* gwrow = gwp + o * in;
        for (std::size_t i = 0; i < rows; ++i) {
            const double g = dyp[i * outs + o];
            gbp[o] += g;
            if (g == 0.0) {
                continue;
            }
            const double* xrow = xp + i * in;
            for (std::size_t k = 0; k < in; ++k) {
                gwrow[k] += g * xrow[k];
            }
        }
    }
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    if (dy.cols != w.rows) {
        throw ShapeError("affine backward input: shape mismatch");
    }
    const std::size_t rows = dy.rows;
    const std::size_t outs = w.rows;
    const std::size_t in = w.cols;
    dx.resize(rows, in);
    const double* dyp = dy.data.data();
    const double* wp = w.data.data();
    double* dxp = dx.data.data();
    const bool go_parallel = rows * in * outs >= kParallelWork;

#pragma omp parallel for schedule(static) if (go_parallel)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* dxrow = dxp + i * in;
        for (std::size_t o = 0; o < outs; ++o) {
            const double g = dyp[i * outs + o];
            const double* wrow = wp + o * in;
            for (std::size_t k = 0; k < in; ++k) {
                dxrow[k] += g * wrow[k];
            }
        }
    }
}

} // namespace parallel

int kernel_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_kernel_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n < 1 ? 1 : n);
#else
    (void)n;
#endif
}

} // namespace tdvae
