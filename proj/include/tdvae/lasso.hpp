#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdvae/kernels.hpp"

namespace tdvae {

struct LassoOptions {
    double tolerance = 1e-8;        // stop when the largest coordinate change falls below this
    std::size_t max_sweeps = 10000;
};

struct LassoFit {
    std::vector<double> weights;
    double alpha = 0.0;
    bool converged = false;
    std::size_t sweeps = 0;
    double last_max_change = 0.0;   // diagnostics when not converged
    double residual_rms = 0.0;
    double objective = 0.0;
};

/// (1 / 2N) |y - X w|^2 + alpha |w|_1
double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> w, double alpha);

/// Cyclic coordinate descent with soft-thresholding, no intercept (inputs are
/// expected to be standardized). Starts from w = 0, so for
/// alpha >= max_j |x_j . y| / N the result is exactly zero.
LassoFit lasso_fit(const Matrix& x, std::span<const double> y, double alpha, const LassoOptions& options = {});

/// {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2, 0.4, 0.8, 1}
std::vector<double> default_alpha_grid();

struct CvOptions {
    std::vector<double> alphas = default_alpha_grid();
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    LassoOptions lasso;
};

struct LassoCvResult {
    double best_alpha = 0.0;
    std::vector<double> alphas;   // ascending
    std::vector<double> cv_mse;   // mean held-out MSE per alpha
    LassoFit fit;                 // refit on all rows with best_alpha
};

/// K-fold cross-validated alpha selection. Folds are contiguous blocks of a
/// seeded shuffle; the alpha with the lowest mean held-out MSE wins, ties go
/// to the larger alpha. Throws ConfigError when rows < folds.
LassoCvResult lasso_cv(const Matrix& x, std::span<const double> y, const CvOptions& options);

} // namespace tdvae
