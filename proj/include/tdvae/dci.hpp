#pragma once

// Disentanglement / completeness / informativeness from a lasso importance
// matrix, the DC-score, and CSV/JSON export of the results.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdvae/kernels.hpp"
#include "tdvae/lasso.hpp"

namespace tdvae {

/// Codes (N x D_codes) paired with ground-truth factors (N x K).
struct CodeFactorTable {
    Matrix codes;
    Matrix factors;
    bool standardized = false;

    /// Throws ShapeError on mismatched row counts or empty tables.
    void validate() const;
};

struct Standardized {
    Matrix values;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::size_t> constant_columns;  // passed through as zeros
};

/// Zero mean, unit (population) variance per column.
Standardized standardize(const Matrix& m);

/// Standardizes both sides; constant columns are reported in `warnings`.
CodeFactorTable standardize(const CodeFactorTable& table, std::vector<std::string>* warnings = nullptr);

/// Lasso regressor of one factor on all codes.
struct FactorRegressor {
    double alpha = 0.0;
    std::vector<double> weights;   // one per code
    std::vector<double> cv_mse;    // per alpha in the grid
    bool converged = true;
};

/// R (D_codes x K) with R[a][i] = |W[i][a]|, plus the regressors that produced it.
struct ImportanceMatrix {
    Matrix r;
    std::vector<FactorRegressor> regressors;
};

/// Fits one cross-validated lasso per factor (independent, run in parallel).
ImportanceMatrix importance_matrix(const CodeFactorTable& standardized_table, const CvOptions& cv);

struct DisentanglementResult {
    double score = 0.0;
    std::vector<double> per_code;  // D_a
    std::vector<double> rho;       // relative importance of each code
    std::size_t rank = 0;
    bool zero_matrix = false;
};

struct CompletenessResult {
    double score = 0.0;
    std::vector<double> per_factor;   // C_j
    std::vector<std::size_t> zero_columns;
};

/// Singular values above rel_tol * largest, via a Jacobi SVD.
std::size_t numerical_rank(const Matrix& r, double rel_tol = 1e-8);

/// (rank(R) / K) * sum_a rho_a (1 - H_K(P_a)).
DisentanglementResult disentanglement(const Matrix& r);

/// mean_j (1 - H_D(P~_j)).
CompletenessResult completeness(const Matrix& r);

/// (1/K) sum_j mean_rows (z_j - c . w_j)^2 on standardized values.
double informativeness(const CodeFactorTable& standardized_table, const std::vector<FactorRegressor>& regressors);

double dc_score(double disentanglement, double completeness);

struct MetricsConfig {
    CvOptions cv;                   // alpha grid, folds, fold shuffle seed
    std::uint64_t split_seed = 0;   // regressor-fit / informativeness split
    double holdout_fraction = 0.2;
};

struct DciReport {
    double disentanglement = 0.0;
    double completeness = 0.0;
    double informativeness = 0.0;
    double dc_score = 0.0;
    std::vector<double> per_code_disentanglement;
    std::vector<double> per_factor_completeness;
    std::vector<double> rho;
    std::size_t rank = 0;
    Matrix importance;
    std::vector<double> alphas;     // selected alpha per factor
    std::size_t fit_rows = 0;
    std::size_t holdout_rows = 0;
    std::vector<std::string> warnings;
};

/// Full pipeline: standardize with the table's own statistics, fit the
/// regressors on one part, measure informativeness on the held-out part.
DciReport evaluate_dci(const CodeFactorTable& table, const MetricsConfig& config);

nlohmann::json to_json(const DciReport& report);

/// Floats with 9 significant digits, as used in every CSV the tools write.
std::string format_float(double v);

/// R as CSV: header "code,factor_0,...", one row per code.
std::string importance_csv(const Matrix& r);

struct Histogram2D {
    std::size_t bins = 32;
    double x_lo = 0.0, x_hi = 0.0;
    double y_lo = 0.0, y_hi = 0.0;
    std::vector<std::uint64_t> counts;  // bins x bins, x-major

    std::uint64_t at(std::size_t xb, std::size_t yb) const { return counts[xb * bins + yb]; }
};

/// Joint histogram over each variable's observed range.
Histogram2D histogram2d(std::span<const double> x, std::span<const double> y, std::size_t bins = 32);

/// Long-format CSV of the (code a, factor j) histograms for every pair:
/// code,factor,code_bin,factor_bin,code_center,factor_center,count
std::string heatmap_csv(const CodeFactorTable& table, std::size_t bins = 32);

/// Parses a numeric CSV with one header row. Non-numeric cells throw ParseError.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable parse_csv(const std::string& text);

} // namespace tdvae
