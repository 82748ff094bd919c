#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tdvae/dci.hpp"
#include "tdvae/error.hpp"
#include "tdvae/lasso.hpp"
#include "oracles.hpp"

using namespace tdvae;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data) {
        v = g(rng);
    }
    return m;
}

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) {
            m(r, c++) = v;
        }
        ++r;
    }
    return m;
}

MetricsConfig test_metrics(std::uint64_t seed) {
    MetricsConfig m;
    m.cv.seed = seed;
    m.split_seed = seed + 1;
    return m;
}

std::vector<double> column(const Matrix& m, std::size_t c) {
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        out[r] = m(r, c);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------- lasso

TEST_CASE("lasso with alpha 0 on orthonormal columns is OLS") {
    // Columns scaled so that X^T X / N = I.
    const std::size_t n = 8;
    Matrix x(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        x(i, 1) = (i < n / 2) ? 1.0 : -1.0;
    }
    const std::vector<double> y{3, -1, 2, 0.5, 1, 1, -2, 4};
    const LassoFit fit = lasso_fit(x, y, 0.0);
    for (std::size_t j = 0; j < 2; ++j) {
        double xty = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            xty += x(i, j) * y[i];
        }
        CHECK(fit.weights[j] == doctest::Approx(xty / n).epsilon(1e-12));
    }
}

TEST_CASE("lasso null threshold is exact") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Matrix x = random_matrix(20, 5, seed);
        const std::vector<double> y = random_matrix(20, 1, seed + 100).data;
        const double max_corr = oracle::lasso_null_alpha(x, y);
        for (double alpha : {max_corr, max_corr * 1.5, max_corr + 1.0}) {
            const LassoFit fit = lasso_fit(x, y, alpha);
            for (double w : fit.weights) {
                CHECK(w == 0.0);
            }
        }
        const LassoFit below = lasso_fit(x, y, max_corr * 0.9);
        CHECK(std::any_of(below.weights.begin(), below.weights.end(), [](double w) { return w != 0.0; }));
    }
}

TEST_CASE("lasso matches the KKT sign-pattern oracle") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Matrix x = random_matrix(20, 5, 1000 + seed);
        const Matrix noise = random_matrix(20, 1, 2000 + seed);
        std::vector<double> y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            y[i] = 1.5 * x(i, 0) - 0.7 * x(i, 2) + 0.2 * x(i, 4) + 0.5 * noise.data[i];
        }
        for (double alpha : {0.01, 0.1, 0.3}) {
            const LassoFit fit = lasso_fit(x, y, alpha);
            CHECK(fit.converged);
            const double best = oracle::lasso_kkt_minimum(x, y, alpha);
            INFO("seed " << seed << " alpha " << alpha);
            CHECK(std::abs(fit.objective - best) < 1e-6);
            CHECK(fit.objective == doctest::Approx(lasso_objective(x, y, fit.weights, alpha)));
        }
    }
}

TEST_CASE("lasso input validation") {
    const Matrix x = random_matrix(5, 2, 1);
    const std::vector<double> short_y(4, 0.0);
    CHECK_THROWS_AS(lasso_fit(x, short_y, 0.1), ShapeError);
    const std::vector<double> y(5, 0.0);
    CHECK_THROWS_AS(lasso_fit(x, y, -1.0), ConfigError);
    CvOptions cv;
    CHECK_THROWS_AS(lasso_cv(x, y, cv), ConfigError);  // 5 rows < 10 folds
}

TEST_CASE("cross-validation on noiseless linear data picks the smallest alpha") {
    const Matrix x = random_matrix(300, 4, 5);
    const std::vector<double> truth{0.8, -0.3, 0.0, 0.5};
    std::vector<double> y(300, 0.0);
    for (std::size_t i = 0; i < 300; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            y[i] += truth[j] * x(i, j);
        }
    }
    CvOptions cv;
    cv.seed = 9;
    const LassoCvResult res = lasso_cv(x, y, cv);
    CHECK(res.best_alpha == 1e-6);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(res.fit.weights[j] - truth[j]) < 1e-3);
    }
    CHECK(std::is_sorted(res.alphas.begin(), res.alphas.end()));
    CHECK(res.cv_mse.size() == res.alphas.size());
}

TEST_CASE("cross-validation on pure noise keeps weights near zero") {
    const Matrix x = standardize(random_matrix(400, 5, 21)).values;
    const std::vector<double> y = standardize(random_matrix(400, 1, 22)).values.data;
    CvOptions cv;
    cv.seed = 3;
    const LassoCvResult res = lasso_cv(x, y, cv);
    double l1 = 0.0;
    for (double w : res.fit.weights) {
        l1 += std::abs(w);
    }
    CHECK(l1 < 0.1);
}

TEST_CASE("cross-validation is deterministic for a fixed shuffle seed") {
    const Matrix x = random_matrix(120, 3, 30);
    const std::vector<double> y = random_matrix(120, 1, 31).data;
    CvOptions cv;
    cv.seed = 77;
    const LassoCvResult a = lasso_cv(x, y, cv);
    const LassoCvResult b = lasso_cv(x, y, cv);
    CHECK(a.cv_mse == b.cv_mse);
    CHECK(a.fit.weights == b.fit.weights);
    CHECK(a.best_alpha == b.best_alpha);
}

// ---------------------------------------------------------------- standardization

TEST_CASE("standardize") {
    Matrix m = from_rows({{1, 5}, {2, 5}, {3, 5}});
    std::vector<std::string> warnings;
    const CodeFactorTable t = standardize(CodeFactorTable{m, m, false}, &warnings);
    CHECK(t.standardized);
    const double s = std::sqrt(1.5);
    CHECK(t.codes(0, 0) == doctest::Approx(-s));
    CHECK(t.codes(1, 0) == doctest::Approx(0.0));
    CHECK(t.codes(2, 0) == doctest::Approx(s));
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(t.codes(r, 1) == 0.0);
    }
    CHECK(warnings.size() == 2);

    const Standardized once = standardize(random_matrix(50, 3, 4));
    const Standardized twice = standardize(once.values);
    for (std::size_t i = 0; i < once.values.data.size(); ++i) {
        CHECK(twice.values.data[i] == doctest::Approx(once.values.data[i]).epsilon(1e-12));
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const auto col = column(once.values, c);
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / 50;
        double var = 0.0;
        for (double v : col) {
            var += (v - mean) * (v - mean);
        }
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::abs(var / 50 - 1.0) < 1e-12);
    }
}

// ---------------------------------------------------------------- formulas

TEST_CASE("disentanglement examples") {
    CHECK(disentanglement(from_rows({{1, 0}, {0, 1}})).score == doctest::Approx(1.0));
    CHECK(disentanglement(from_rows({{1, 1}, {1, 1}})).score == doctest::Approx(0.0).scale(1));
    const DisentanglementResult single = disentanglement(from_rows({{1, 0}}));
    CHECK(single.per_code[0] == doctest::Approx(1.0));
    CHECK(single.rank == 1);
    CHECK(single.score == doctest::Approx(0.5));
    const DisentanglementResult zero = disentanglement(Matrix(3, 2));
    CHECK(zero.zero_matrix);
    CHECK(zero.score == 0.0);
}

TEST_CASE("completeness examples") {
    CHECK(completeness(from_rows({{1, 0}, {0, 1}})).score == doctest::Approx(1.0));
    CHECK(completeness(from_rows({{1}, {1}})).per_factor[0] == doctest::Approx(0.0).scale(1));
    const CompletenessResult c = completeness(from_rows({{2, 0}, {0, 1}, {0, 1}}));
    const double c2 = 1.0 + 2 * 0.5 * std::log(0.5) / std::log(3.0);
    CHECK(c.per_factor[0] == doctest::Approx(1.0));
    CHECK(c.per_factor[1] == doctest::Approx(c2).epsilon(1e-12));
    CHECK(std::abs(c2 - 0.3691) < 1e-4);
    CHECK(std::abs(c.score - 0.6845) < 1e-4);
    CHECK(c.score == doctest::Approx((1.0 + c2) / 2).epsilon(1e-12));

    const CompletenessResult dead = completeness(from_rows({{1, 0}, {1, 0}}));
    CHECK(dead.per_factor[1] == 0.0);
    CHECK(dead.zero_columns == std::vector<std::size_t>{1});
}

TEST_CASE("formulas agree with a direct evaluation on random R") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> dims(2, 8);
    for (int rep = 0; rep < 100; ++rep) {
        Matrix r(dims(rng), dims(rng));
        for (double& v : r.data) {
            v = u(rng);
        }
        CHECK(disentanglement(r).score == doctest::Approx(oracle::disentanglement(r)).epsilon(1e-12));
        CHECK(completeness(r).score == doctest::Approx(oracle::completeness(r)).epsilon(1e-12));
    }
}

TEST_CASE("scale and permutation invariance") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    std::uniform_int_distribution<int> dims(2, 8);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t d = dims(rng);
        const std::size_t k = dims(rng);
        Matrix r(d, k);
        for (double& v : r.data) {
            v = u(rng) < 0.3 ? 0.0 : u(rng);
        }
        const double dis = disentanglement(r).score;
        const double com = completeness(r).score;

        Matrix scaled = r;
        const double c = scale(rng);
        for (double& v : scaled.data) {
            v *= c;
        }
        CHECK(disentanglement(scaled).score == doctest::Approx(dis).epsilon(1e-10));
        CHECK(completeness(scaled).score == doctest::Approx(com).epsilon(1e-10));

        std::vector<std::size_t> rp(d), cp(k);
        std::iota(rp.begin(), rp.end(), 0);
        std::iota(cp.begin(), cp.end(), 0);
        std::shuffle(rp.begin(), rp.end(), rng);
        std::shuffle(cp.begin(), cp.end(), rng);
        Matrix permuted(d, k);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t j = 0; j < k; ++j) {
                permuted(a, j) = r(rp[a], cp[j]);
            }
        }
        CHECK(disentanglement(permuted).score == doctest::Approx(dis).epsilon(1e-10));
        CHECK(completeness(permuted).score == doctest::Approx(com).epsilon(1e-10));
    }
}

TEST_CASE("numerical rank") {
    CHECK(numerical_rank(from_rows({{1, 0}, {0, 1}})) == 2);
    CHECK(numerical_rank(from_rows({{1, 2}, {2, 4}, {3, 6}})) == 1);
    CHECK(numerical_rank(Matrix(2, 3)) == 0);
    CHECK(numerical_rank(from_rows({{1, 0}, {0, 1e-12}})) == 1);
}

TEST_CASE("dc score") {
    CHECK(std::abs(dc_score(0.36, 0.43) - 0.39) < 0.005);
    CHECK(std::abs(dc_score(0.69, 0.61) - 0.65) < 0.005);
    CHECK(dc_score(0.4, 0.4) == doctest::Approx(0.4));
    CHECK(dc_score(0.0, 1.0) == 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        CHECK(dc_score(a, b) <= (a + b) / 2 + 1e-15);
    }
}

// ---------------------------------------------------------------- pipeline

TEST_CASE("identity codes give a diagonal importance matrix and perfect scores") {
    Matrix f = random_matrix(1000, 4, 40);
    for (double& v : f.data) {
        v = std::tanh(v);
    }
    const CodeFactorTable table = standardize(CodeFactorTable{f, f, false});
    CvOptions cv;
    cv.seed = 1;
    const ImportanceMatrix im = importance_matrix(table, cv);
    REQUIRE(im.r.rows == 4);
    REQUIRE(im.r.cols == 4);
    double trace = 0.0;
    double off = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t j = 0; j < 4; ++j) {
            (a == j ? trace : off) += im.r(a, j);
        }
    }
    CHECK(off < 0.05 * trace);

    const DciReport rep = evaluate_dci(CodeFactorTable{f, f, false}, test_metrics(5));
    CHECK(rep.disentanglement > 0.95);
    CHECK(rep.completeness > 0.95);
    CHECK(rep.informativeness < 1e-3);
    CHECK(rep.dc_score == doctest::Approx(std::sqrt(rep.disentanglement * rep.completeness)));
}

TEST_CASE("independent codes carry no importance") {
    const Matrix codes = random_matrix(1000, 3, 50);
    const Matrix factors = random_matrix(1000, 2, 51);
    const DciReport rep = evaluate_dci(CodeFactorTable{codes, factors, false}, test_metrics(6));
    REQUIRE(rep.importance.rows == 3);
    REQUIRE(rep.importance.cols == 2);
    // Under the null an unpenalized weight has standard deviation about
    // 1/sqrt(fit rows); the lasso only shrinks it further.
    const double bound = 4.0 / std::sqrt(static_cast<double>(rep.fit_rows));
    for (double v : rep.importance.data) {
        CHECK(v < bound);
    }
    CHECK(rep.informativeness == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.informativeness >= 0.0);
}

TEST_CASE("pipeline shape errors") {
    CHECK_THROWS_AS(evaluate_dci(CodeFactorTable{Matrix(10, 2), Matrix(9, 2), false}, test_metrics(1)), ShapeError);
    CHECK_THROWS_AS(evaluate_dci(CodeFactorTable{Matrix(0, 2), Matrix(0, 2), false}, test_metrics(1)), ShapeError);
}

TEST_CASE("report json carries every field") {
    Matrix f = random_matrix(300, 2, 60);
    const DciReport rep = evaluate_dci(CodeFactorTable{f, f, false}, test_metrics(7));
    const nlohmann::json j = to_json(rep);
    for (const char* key : {"disentanglement", "completeness", "informativeness", "dc_score", "rank", "rho",
                            "per_code_disentanglement", "per_factor_completeness", "importance", "alphas",
                            "warnings", "num_codes", "num_factors", "fit_rows", "holdout_rows"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["importance"].size() == 2);
    CHECK(j["importance"][0].size() == 2);
    CHECK(j["dc_score"].get<double>() ==
          doctest::Approx(std::sqrt(j["disentanglement"].get<double>() * j["completeness"].get<double>())));
}

// ---------------------------------------------------------------- export

TEST_CASE("histograms count every sample and concentrate on the diagonal for identity data") {
    std::mt19937_64 rng(70);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(2000);
    for (double& v : x) {
        v = u(rng);
    }
    const Histogram2D h = histogram2d(x, x);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == 2000);
    std::uint64_t diag = 0;
    for (std::size_t b = 0; b < h.bins; ++b) {
        diag += h.at(b, b);
    }
    CHECK(diag == 2000);

    Matrix codes(2000, 2);
    for (std::size_t i = 0; i < 2000; ++i) {
        codes(i, 0) = x[i];
        codes(i, 1) = u(rng);
    }
    const CsvTable t = parse_csv(heatmap_csv(CodeFactorTable{codes, codes, false}));
    REQUIRE(t.header.size() == 7);
    CHECK(t.header[0] == "code");
    std::uint64_t total = 0;
    for (const auto& row : t.rows) {
        if (row[0] == 0 && row[1] == 0) {
            total += static_cast<std::uint64_t>(row[6]);
        }
    }
    CHECK(total == 2000);
}

TEST_CASE("importance csv round trip") {
    const Matrix r = from_rows({{0.123456789012, 0}, {1e-7, 3.5}, {2.0 / 3.0, 1e5}});
    const CsvTable t = parse_csv(importance_csv(r));
    CHECK(t.header == std::vector<std::string>{"code", "factor_0", "factor_1"});
    REQUIRE(t.rows.size() == 3);
    for (std::size_t a = 0; a < 3; ++a) {
        CHECK(t.rows[a][0] == a);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(t.rows[a][j + 1] == doctest::Approx(r(a, j)).epsilon(1e-8));
            CHECK(format_float(t.rows[a][j + 1]) == format_float(r(a, j)));
        }
    }
    CHECK_THROWS_AS(parse_csv("a,b\n1,x\n"), ParseError);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ParseError);
    CHECK_THROWS_AS(parse_csv(""), ParseError);
}
