#include "tdvae/dci.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/SVD>

#include "tdvae/error.hpp"
#include "tdvae/train.hpp"

namespace tdvae {

namespace {

// sum_k p_k log_base p_k with 0 log 0 = 0.
double neg_entropy(std::span<const double> p, double base) {
    const double log_base = std::log(base);
    double s = 0.0;
    for (double v : p) {
        if (v > 0.0) {
            s += v * std::log(v) / log_base;
        }
    }
    return s;
}

} // namespace

void CodeFactorTable::validate() const {
    if (codes.rows != factors.rows) {
        throw ShapeError("table: " + std::to_string(codes.rows) + " code rows vs " + std::to_string(factors.rows) +
                         " factor rows");
    }
    if (codes.rows == 0 || codes.cols == 0 || factors.cols == 0) {
        throw ShapeError("table: empty codes or factors");
    }
}

Standardized standardize(const Matrix& m) {
    Standardized out;
    out.values = Matrix(m.rows, m.cols);
    out.mean.assign(m.cols, 0.0);
    out.stddev.assign(m.cols, 0.0);
    const double n = static_cast<double>(m.rows);
    for (std::size_t j = 0; j < m.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            mean += m(i, j);
        }
        mean /= n;
        double var = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double d = m(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double sd = std::sqrt(var);
        out.mean[j] = mean;
        out.stddev[j] = sd;
        // Relative test so columns that are constant up to rounding count as dead.
        if (!(sd > 1e-12 * std::max(1.0, std::fabs(mean)))) {
            out.constant_columns.push_back(j);
            continue;
        }
        for (std::size_t i = 0; i < m.rows; ++i) {
            out.values(i, j) = (m(i, j) - mean) / sd;
        }
    }
    return out;
}

CodeFactorTable standardize(const CodeFactorTable& table, std::vector<std::string>* warnings) {
    table.validate();
    const Standardized c = standardize(table.codes);
    const Standardized f = standardize(table.factors);
    if (warnings != nullptr) {
        for (std::size_t j : c.constant_columns) {
            warnings->push_back("code " + std::to_string(j) + " is constant; treated as a dead code");
        }
        for (std::size_t j : f.constant_columns) {
            warnings->push_back("factor " + std::to_string(j) + " is constant; treated as a dead factor");
        }
    }
    return {c.values, f.values, true};
}

ImportanceMatrix importance_matrix(const CodeFactorTable& table, const CvOptions& cv) {
    table.validate();
    const std::size_t k = table.factors.cols;
    const std::size_t d = table.codes.cols;
    ImportanceMatrix out;
    out.r = Matrix(d, k);
    out.regressors.resize(k);

    std::vector<std::vector<double>> targets(k, std::vector<double>(table.factors.rows));
    for (std::size_t i = 0; i < table.factors.rows; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            targets[j][i] = table.factors(i, j);
        }
    }

    // Each factor writes only its own slot, so the result is thread-count independent.
    std::vector<std::string> errors(k);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(k); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        try {
            const LassoCvResult res = lasso_cv(table.codes, targets[j], cv);
            out.regressors[j] = {res.best_alpha, res.fit.weights, res.cv_mse, res.fit.converged};
        } catch (const std::exception& e) {
            errors[j] = e.what();
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!errors[j].empty()) {
            throw ConfigError("importance matrix, factor " + std::to_string(j) + ": " + errors[j]);
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t a = 0; a < d; ++a) {
            out.r(a, j) = std::fabs(out.regressors[j].weights[a]);
        }
    }
    return out;
}

std::size_t numerical_rank(const Matrix& r, double rel_tol) {
    if (r.rows == 0 || r.cols == 0) {
        return 0;
    }
    Eigen::MatrixXd m(r.rows, r.cols);
    for (std::size_t i = 0; i < r.rows; ++i) {
        for (std::size_t j = 0; j < r.cols; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r(i, j);
        }
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s(0) > 0.0)) {
        return 0;
    }
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) {
            ++rank;
        }
    }
    return rank;
}

DisentanglementResult disentanglement(const Matrix& r) {
    const std::size_t d = r.rows;
    const std::size_t k = r.cols;
    DisentanglementResult out;
    out.per_code.assign(d, 0.0);
    out.rho.assign(d, 0.0);
    double total = 0.0;
    for (double v : r.data) {
        if (!(v >= 0.0)) {
            throw DomainError("disentanglement: importance entries must be >= 0");
        }
        total += v;
    }
    if (total == 0.0) {
        out.zero_matrix = true;
        return out;
    }
    out.rank = numerical_rank(r);
    std::vector<double> p(k);
    double weighted = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        double row = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row += r(a, j);
        }
        if (row == 0.0) {
            continue;
        }
        out.rho[a] = row / total;
        if (k == 1) {
            out.per_code[a] = 1.0;
        } else {
            for (std::size_t j = 0; j < k; ++j) {
                p[j] = r(a, j) / row;
            }
            out.per_code[a] = 1.0 + neg_entropy(p, static_cast<double>(k));
        }
        weighted += out.rho[a] * out.per_code[a];
    }
    out.score = static_cast<double>(out.rank) / static_cast<double>(k) * weighted;
    return out;
}

CompletenessResult completeness(const Matrix& r) {
    const std::size_t d = r.rows;
    const std::size_t k = r.cols;
    CompletenessResult out;
    out.per_factor.assign(k, 0.0);
    std::vector<double> p(d);
    for (std::size_t j = 0; j < k; ++j) {
        double col = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            if (!(r(a, j) >= 0.0)) {
                throw DomainError("completeness: importance entries must be >= 0");
            }
            col += r(a, j);
        }
        if (col == 0.0) {
            out.zero_columns.push_back(j);
            continue;
        }
        if (d == 1) {
            out.per_factor[j] = 1.0;
            continue;
        }
        for (std::size_t a = 0; a < d; ++a) {
            p[a] = r(a, j) / col;
        }
        out.per_factor[j] = 1.0 + neg_entropy(p, static_cast<double>(d));
    }
    double s = 0.0;
    for (double c : out.per_factor) {
        s += c;
    }
    out.score = k == 0 ? 0.0 : s / static_cast<double>(k);
    return out;
}

double informativeness(const CodeFactorTable& table, const std::vector<FactorRegressor>& regressors) {
    table.validate();
    const std::size_t k = table.factors.cols;
    if (regressors.size() != k) {
        throw ShapeError("informativeness: need one regressor per factor");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (regressors[j].weights.size() != table.codes.cols) {
            throw ShapeError("informativeness: regressor width does not match the codes");
        }
        double se = 0.0;
        for (std::size_t i = 0; i < table.codes.rows; ++i) {
            double pred = 0.0;
            for (std::size_t a = 0; a < table.codes.cols; ++a) {
                pred += table.codes(i, a) * regressors[j].weights[a];
            }
            const double e = table.factors(i, j) - pred;
            se += e * e;
        }
        total += se / static_cast<double>(table.codes.rows);
    }
    return total / static_cast<double>(k);
}

double dc_score(double d, double c) { return std::sqrt(std::max(0.0, d) * std::max(0.0, c)); }

DciReport evaluate_dci(const CodeFactorTable& table, const MetricsConfig& config) {
    table.validate();
    DciReport report;
    const CodeFactorTable std_table = table.standardized ? table : standardize(table, &report.warnings);

    auto [fit_rows, hold_rows] = split_indices(std_table.codes.rows, config.holdout_fraction, config.split_seed);
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(hold_rows.begin(), hold_rows.end());
    if (hold_rows.empty()) {
        throw ConfigError("evaluate_dci: held-out split is empty");
    }
    const CodeFactorTable fit{gather_rows(std_table.codes, fit_rows), gather_rows(std_table.factors, fit_rows), true};
    const CodeFactorTable held{gather_rows(std_table.codes, hold_rows), gather_rows(std_table.factors, hold_rows),
                               true};

    const ImportanceMatrix imp = importance_matrix(fit, config.cv);
    const DisentanglementResult dis = disentanglement(imp.r);
    const CompletenessResult com = completeness(imp.r);

    report.disentanglement = dis.score;
    report.completeness = com.score;
    report.dc_score = dc_score(dis.score, com.score);
    report.informativeness = informativeness(held, imp.regressors);
    report.per_code_disentanglement = dis.per_code;
    report.per_factor_completeness = com.per_factor;
    report.rho = dis.rho;
    report.rank = dis.rank;
    report.importance = imp.r;
    report.fit_rows = fit_rows.size();
    report.holdout_rows = hold_rows.size();
    for (std::size_t j = 0; j < imp.regressors.size(); ++j) {
        report.alphas.push_back(imp.regressors[j].alpha);
        if (!imp.regressors[j].converged) {
            report.warnings.push_back("lasso for factor " + std::to_string(j) + " hit the sweep limit");
        }
    }
    if (dis.zero_matrix) {
        report.warnings.push_back("importance matrix is identically zero");
    }
    for (std::size_t j : com.zero_columns) {
        report.warnings.push_back("factor " + std::to_string(j) + " is not predicted by any code");
    }
    return report;
}

nlohmann::json to_json(const DciReport& r) {
    nlohmann::json imp = nlohmann::json::array();
    for (std::size_t a = 0; a < r.importance.rows; ++a) {
        imp.push_back(std::vector<double>(r.importance.row(a).begin(), r.importance.row(a).end()));
    }
    return {
        {"disentanglement", r.disentanglement},
        {"completeness", r.completeness},
        {"informativeness", r.informativeness},
        {"dc_score", r.dc_score},
        {"per_code_disentanglement", r.per_code_disentanglement},
        {"per_factor_completeness", r.per_factor_completeness},
        {"rho", r.rho},
        {"rank", r.rank},
        {"num_codes", r.importance.rows},
        {"num_factors", r.importance.cols},
        {"importance", imp},
        {"alphas", r.alphas},
        {"fit_rows", r.fit_rows},
        {"holdout_rows", r.holdout_rows},
        {"warnings", r.warnings},
    };
}

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string importance_csv(const Matrix& r) {
    std::ostringstream out;
    out << "code";
    for (std::size_t j = 0; j < r.cols; ++j) {
        out << ",factor_" << j;
    }
    out << '\n';
    for (std::size_t a = 0; a < r.rows; ++a) {
        out << a;
        for (std::size_t j = 0; j < r.cols; ++j) {
            out << ',' << format_float(r(a, j));
        }
        out << '\n';
    }
    return out.str();
}

Histogram2D histogram2d(std::span<const double> x, std::span<const double> y, std::size_t bins) {
    if (x.size() != y.size() || x.empty()) {
        throw ShapeError("histogram2d: need two equally long, non-empty series");
    }
    if (bins == 0) {
        throw ConfigError("histogram2d: bins must be positive");
    }
    Histogram2D h;
    h.bins = bins;
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    h.x_lo = *xmin;
    h.x_hi = *xmax;
    h.y_lo = *ymin;
    h.y_hi = *ymax;
    h.counts.assign(bins * bins, 0);
    auto bin_of = [bins](double v, double lo, double hi) -> std::size_t {
        if (!(hi > lo)) {
            return 0;
        }
        const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
        const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(t)));
        return std::min(b, bins - 1);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++h.counts[bin_of(x[i], h.x_lo, h.x_hi) * bins + bin_of(y[i], h.y_lo, h.y_hi)];
    }
    return h;
}

std::string heatmap_csv(const CodeFactorTable& table, std::size_t bins) {
    table.validate();
    std::ostringstream out;
    out << "code,factor,code_bin,factor_bin,code_center,factor_center,count\n";
    std::vector<double> cx(table.codes.rows);
    std::vector<double> fy(table.codes.rows);
    for (std::size_t a = 0; a < table.codes.cols; ++a) {
        for (std::size_t i = 0; i < cx.size(); ++i) {
            cx[i] = table.codes(i, a);
        }
        for (std::size_t j = 0; j < table.factors.cols; ++j) {
            for (std::size_t i = 0; i < fy.size(); ++i) {
                fy[i] = table.factors(i, j);
            }
            const Histogram2D h = histogram2d(cx, fy, bins);
            const double xw = (h.x_hi - h.x_lo) / static_cast<double>(bins);
            const double yw = (h.y_hi - h.y_lo) / static_cast<double>(bins);
            for (std::size_t xb = 0; xb < bins; ++xb) {
                for (std::size_t yb = 0; yb < bins; ++yb) {
                    out << a << ',' << j << ',' << xb << ',' << yb << ','
                        << format_float(h.x_lo + (static_cast<double>(xb) + 0.5) * xw) << ','
                        << format_float(h.y_lo + (static_cast<double>(yb) + 0.5) * yw) << ',' << h.at(xb, yb)
                        << '\n';
                }
            }
        }
    }
    return out.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!l.empty() && l.back() == ',') {
            cells.emplace_back();
        }
        return cells;
    };
    if (!std::getline(in, line)) {
        throw ParseError("csv: missing header");
    }
    table.header = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != table.header.size()) {
            throw ParseError("csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(table.header.size()));
        }
        std::vector<double> row;
        for (const std::string& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty()) {
                throw ParseError("csv: line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace tdvae
