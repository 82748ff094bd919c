#include "tdvae/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tdvae/error.hpp"

namespace tdvae {

namespace {

double soft_threshold(double rho, double alpha) {
    if (rho > alpha) {
        return rho - alpha;
    }
    if (rho < -alpha) {
        return rho + alpha;
    }
    return 0.0;
}

void check_problem(const Matrix& x, std::span<const double> y, double alpha) {
    if (x.rows == 0 || x.cols == 0) {
        throw ShapeError("lasso: empty design matrix");
    }
    if (y.size() != x.rows) {
        throw ShapeError("lasso: target has " + std::to_string(y.size()) + " rows, design has " +
                         std::to_string(x.rows));
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("lasso: alpha must be finite and >= 0");
    }
}

} // namespace

double lasso_objective(const Matrix& x, std::span<const double> y, std::span<const double> w, double alpha) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double pred = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            pred += x(i, j) * w[j];
        }
        const double r = y[i] - pred;
        sse += r * r;
    }
    double l1 = 0.0;
    for (double v : w) {
        l1 += std::fabs(v);
    }
    return sse / (2.0 * static_cast<double>(x.rows)) + alpha * l1;
}

LassoFit lasso_fit(const Matrix& x, std::span<const double> y, double alpha, const LassoOptions& options) {
    check_problem(x, y, alpha);
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    const double nd = static_cast<double>(n);
    const double inv_n = 1.0 / nd;

    // Column-major copy for contiguous coordinate updates.
    std::vector<double> cols(n * p);
    std::vector<double> col_sq(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(i, j);
            cols[j * n + i] = v;
            col_sq[j] += v * v;
        }
        col_sq[j] *= inv_n;
    }

    LassoFit fit;
    fit.alpha = alpha;
    fit.weights.assign(p, 0.0);
    std::vector<double> residual(y.begin(), y.end());

    for (fit.sweeps = 1; fit.sweeps <= options.max_sweeps; ++fit.sweeps) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double* col = cols.data() + j * n;
            const double old = fit.weights[j];
            double next = 0.0;
            if (col_sq[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    dot += col[i] * residual[i];
                }
                const double rho = dot / nd + col_sq[j] * old;
                next = soft_threshold(rho, alpha) / col_sq[j];
            }
            const double delta = next - old;
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) {
                    residual[i] -= delta * col[i];
                }
                fit.weights[j] = next;
            }
            max_change = std::max(max_change, std::fabs(delta));
        }
        fit.last_max_change = max_change;
        if (max_change < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.sweeps = std::min(fit.sweeps, options.max_sweeps);

    double ss = 0.0;
    for (double r : residual) {
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss * inv_n);
    fit.objective = lasso_objective(x, y, fit.weights, alpha);
    return fit;
}

std::vector<double> default_alpha_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2, 0.4, 0.8, 1.0}; }

LassoCvResult lasso_cv(const Matrix& x, std::span<const double> y, const CvOptions& options) {
    if (options.folds < 2) {
        throw ConfigError("lasso_cv: need at least 2 folds");
    }
    if (x.rows < options.folds) {
        throw ConfigError("lasso_cv: " + std::to_string(x.rows) + " rows is fewer than " +
                          std::to_string(options.folds) + " folds");
    }
    if (options.alphas.empty()) {
        throw ConfigError("lasso_cv: empty alpha grid");
    }
    check_problem(x, y, 0.0);

    LassoCvResult out;
    out.alphas = options.alphas;
    std::sort(out.alphas.begin(), out.alphas.end());
    for (double a : out.alphas) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
            throw ConfigError("lasso_cv: alpha must be finite and >= 0");
        }
    }

    const std::size_t n = x.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);

    // Fold f covers order[start[f], start[f+1]); the first n % folds folds get one extra row.
    std::vector<std::size_t> start(options.folds + 1, 0);
    for (std::size_t f = 0; f < options.folds; ++f) {
        start[f + 1] = start[f] + n / options.folds + (f < n % options.folds ? 1 : 0);
    }

    out.cv_mse.assign(out.alphas.size(), 0.0);
    for (std::size_t f = 0; f < options.folds; ++f) {
        const std::size_t held = start[f + 1] - start[f];
        Matrix xt(n - held, x.cols);
        std::vector<double> yt;
        yt.reserve(n - held);
        Matrix xv(held, x.cols);
        std::vector<double> yv;
        yv.reserve(held);
        std::size_t ti = 0;
        std::size_t vi = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t row = order[k];
            const bool in_fold = k >= start[f] && k < start[f + 1];
            Matrix& dst = in_fold ? xv : xt;
            std::size_t& di = in_fold ? vi : ti;
            std::copy(x.row(row).begin(), x.row(row).end(), dst.row(di).begin());
            ++di;
            (in_fold ? yv : yt).push_back(y[row]);
        }
        for (std::size_t a = 0; a < out.alphas.size(); ++a) {
            const LassoFit fit = lasso_fit(xt, yt, out.alphas[a], options.lasso);
            double se = 0.0;
            for (std::size_t i = 0; i < held; ++i) {
                double pred = 0.0;
                for (std::size_t j = 0; j < x.cols; ++j) {
                    pred += xv(i, j) * fit.weights[j];
                }
                const double r = yv[i] - pred;
                se += r * r;
            }
            out.cv_mse[a] += se / static_cast<double>(held);
        }
    }
    for (double& m : out.cv_mse) {
        m /= static_cast<double>(options.folds);
    }

    std::size_t best = 0;
    for (std::size_t a = 1; a < out.alphas.size(); ++a) {
        if (out.cv_mse[a] <= out.cv_mse[best]) {
            best = a;
        }
    }
    out.best_alpha = out.alphas[best];
    out.fit = lasso_fit(x, y, out.best_alpha, options.lasso);
    return out;
}

} // namespace tdvae
