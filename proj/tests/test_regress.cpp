#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "firmprod/linreg.hpp"
#include "firmprod/panel.hpp"
#include "firmprod/regress.hpp"
#include "firmprod/rng.hpp"
#include "firmprod/stats.hpp"

using namespace firmprod;

namespace {

Matrix gaussian_matrix(Rng& rng, Eigen::Index n, Eigen::Index p) {
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal(0, 1);
    }
    return m;
}

}  // namespace

TEST_CASE("pcr: planted linear model in the scores") {
    Rng rng(1);
    const Eigen::Index n = 500;
    const Matrix scores = gaussian_matrix(rng, n, 5);
    Vector tfp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        tfp(i) = 2.0 * scores(i, 0) - scores(i, 2) + rng.normal(0, 0.01);
    }
    const RegressionReport report = pcr(tfp, scores);
    REQUIRE(report.terms.size() == 6);
    CHECK(report.terms[0] == "(Intercept)");
    CHECK(report.terms[1] == "PC1");
    CHECK(std::fabs(report.coefficients[1] - 2.0) < 0.02);
    CHECK(std::fabs(report.coefficients[2]) < 0.02);
    CHECK(std::fabs(report.coefficients[3] + 1.0) < 0.02);
    CHECK(std::fabs(report.coefficients[4]) < 0.02);
    CHECK(report.p_values[1] < 1e-10);
    CHECK(report.p_values[3] < 1e-10);
    CHECK(report.r_squared > 0.99);
}

TEST_CASE("pcr: null model shows no systematic significance") {
    Rng rng(2);
    const Eigen::Index n = 400;
    const Matrix scores = gaussian_matrix(rng, n, 6);
    Vector tfp(n);
    for (Eigen::Index i = 0; i < n; ++i) tfp(i) = rng.normal(0, 1);
    const RegressionReport report = pcr(tfp, scores);
    for (std::size_t j = 1; j < report.terms.size(); ++j) {
        CHECK(std::fabs(report.coefficients[j]) < 3.0 * report.standard_errors[j]);
        CHECK(report.p_values[j] > 1e-4);
    }
}

TEST_CASE("pcr: orthogonality decoupling on exact PC scores") {
    // On orthogonal score columns each coefficient is cov(y, s_j)/var(s_j),
    // no matter which other components enter the regression.
    Rng rng(3);
    const Eigen::Index n = 200;
    Matrix raw = gaussian_matrix(rng, n, 4);
    // orthogonalize columns against each other and the constant
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        raw.col(j).array() -= raw.col(j).mean();
        for (Eigen::Index k = 0; k < j; ++k) {
            raw.col(j) -= raw.col(k) * (raw.col(k).dot(raw.col(j)) / raw.col(k).squaredNorm());
        }
    }
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = 0.7 * raw(i, 0) - 1.3 * raw(i, 2) + rng.normal(0, 0.5);
    }
    const RegressionReport full = pcr(y, raw);
    const RegressionReport sub = pcr(y, raw.leftCols(2));
    for (int j = 0; j < 2; ++j) {
        const double direct = raw.col(j).dot(y) / raw.col(j).squaredNorm();
        CHECK(full.coefficients[static_cast<std::size_t>(j) + 1] ==
              doctest::Approx(direct).epsilon(1e-8));
        CHECK(sub.coefficients[static_cast<std::size_t>(j) + 1] ==
              doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("pcr: p-values match the independent t oracle") {
    Rng rng(4);
    const Eigen::Index n = 60;
    const Matrix scores = gaussian_matrix(rng, n, 3);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = 0.3 * scores(i, 1) + rng.normal(0, 1);
    const RegressionReport report = pcr(y, scores);
    const double dof = static_cast<double>(n - 4);
    for (std::size_t j = 0; j < report.terms.size(); ++j) {
        const double expected = stats::t_two_sided_p(report.t_stats[j], dof);
        CHECK(report.p_values[j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("pcr: categorical controls with a dropped reference level") {
    Rng rng(5);
    const Eigen::Index n = 120;
    const Matrix scores = gaussian_matrix(rng, n, 2);
    CategoricalControl country;
    country.name = "country";
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 3);
        country.values.push_back(c == 0 ? "AA" : (c == 1 ? "BB" : "CC"));
        y(i) = scores(i, 0) + (c == 1 ? 2.0 : 0.0) + (c == 2 ? -1.0 : 0.0) + rng.normal(0, 0.1);
    }
    const RegressionReport report = pcr(y, scores, {}, {country});
    CHECK(report.controls_included);
    REQUIRE(report.terms.size() == 5);  // intercept, PC1, PC2, country=BB, country=CC
    CHECK(report.terms[3] == "country=BB");
    CHECK(report.terms[4] == "country=CC");
    CHECK(std::fabs(report.coefficients[3] - 2.0) < 0.1);
    CHECK(std::fabs(report.coefficients[4] + 1.0) < 0.1);
}

TEST_CASE("pcr_by_cluster: skips clusters below the n >= p + 5 threshold") {
    Rng rng(6);
    const Eigen::Index n = 106;
    const Matrix scores = gaussian_matrix(rng, n, 8);
    Vector y(n);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = rng.normal(0, 1);
        labels.push_back(i < 100 ? 0 : 1);  // cluster 1 has 6 observations, 8 PCs
    }
    const PcrByCluster result = pcr_by_cluster(y, scores, labels);
    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0].subsample == 0);
    REQUIRE(result.skipped.size() == 1);
    CHECK(result.skipped[0].cluster == 1);
    CHECK(result.skipped[0].n == 6);
    CHECK(result.skipped[0].reason.find("InsufficientSample") != std::string::npos);
}

TEST_CASE("pcr_by_cluster: single cluster equals the full-sample regression") {
    Rng rng(7);
    const Eigen::Index n = 80;
    const Matrix scores = gaussian_matrix(rng, n, 3);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = 0.5 * scores(i, 0) + rng.normal(0, 0.2);
    const std::vector<int> labels(static_cast<std::size_t>(n), 0);
    const PcrByCluster split = pcr_by_cluster(y, scores, labels);
    const RegressionReport full = pcr(y, scores);
    REQUIRE(split.reports.size() == 1);
    for (std::size_t j = 0; j < full.coefficients.size(); ++j) {
        CHECK(split.reports[0].coefficients[j] ==
              doctest::Approx(full.coefficients[j]).epsilon(1e-12));
    }
}

TEST_CASE("pcr_by_cluster: planted heterogeneous effects") {
    Rng rng(8);
    const Eigen::Index n = 300;
    const Matrix scores = gaussian_matrix(rng, n, 2);
    Vector y(n);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int cluster = i < 150 ? 0 : 1;
        labels.push_back(cluster);
        y(i) = (cluster == 0 ? 1.0 : -1.0) * scores(i, 0) + rng.normal(0, 0.1);
    }
    const PcrByCluster result = pcr_by_cluster(y, scores, labels);
    REQUIRE(result.reports.size() == 2);
    CHECK(result.reports[0].coefficients[1] > 0.9);
    CHECK(result.reports[1].coefficients[1] < -0.9);
    CHECK(result.reports[0].p_values[1] < 1e-10);
    CHECK(result.reports[1].p_values[1] < 1e-10);
}

TEST_CASE("lasso_coordinate_descent: lambda 0 reproduces OLS") {
    Rng rng(9);
    const Eigen::Index n = 150;
    Matrix X = gaussian_matrix(rng, n, 4);
    const auto [Xs, params] = standardize(X);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = 1.5 * Xs(i, 0) - 0.5 * Xs(i, 3) + rng.normal(0, 0.3);
    }
    Vector yc = y.array() - y.mean();
    const Vector beta = lasso_coordinate_descent(Xs, yc, 0.0);
    const Vector ols_beta = ols_coefficients_fast(Xs, yc);
    CHECK((beta - ols_beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lasso_coordinate_descent: lambda at the threshold zeroes everything") {
    Rng rng(10);
    const Eigen::Index n = 100;
    Matrix X = gaussian_matrix(rng, n, 5);
    const auto [Xs, params] = standardize(X);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = Xs(i, 2) + rng.normal(0, 0.1);
    Vector yc = y.array() - y.mean();
    const double lmax = lasso_lambda_max(Xs, yc);
    const Vector at = lasso_coordinate_descent(Xs, yc, lmax);
    const Vector above = lasso_coordinate_descent(Xs, yc, lmax * 1.5);
    for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(at(j) == 0.0);  // exact zeros, not small values
        CHECK(above(j) == 0.0);
    }
}

TEST_CASE("lasso_coordinate_descent: orthonormal design soft-thresholds the OLS solution") {
    // Build X with X^T X / n = I exactly.
    const Eigen::Index n = 8;
    Matrix X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        X(i, 1) = (i % 4 < 2) ? 1.0 : -1.0;
    }
    // y chosen so OLS coefficients are exactly (3, 0.5)
    Vector y = 3.0 * X.col(0) + 0.5 * X.col(1);
    const Vector beta = lasso_coordinate_descent(X, y, 1.0);
    CHECK(beta(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(beta(1) == 0.0);
}

TEST_CASE("lasso objective is non-increasing along the sweep sequence") {
    Rng rng(11);
    const Eigen::Index n = 80;
    Matrix X = gaussian_matrix(rng, n, 6);
    const auto [Xs, params] = standardize(X);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = Xs(i, 0) - Xs(i, 1) + rng.normal(0, 0.5);
    Vector yc = y.array() - y.mean();

    const double lambda = 0.1;
    auto objective = [&](const Vector& b) {
        return (yc - Xs * b).squaredNorm() / (2.0 * n) + lambda * b.cwiseAbs().sum();
    };
    // re-run coordinate descent manually sweep by sweep
    Vector beta = Vector::Zero(6);
    Vector residual = yc;
    double previous = objective(beta);
    for (int sweep = 0; sweep < 25; ++sweep) {
        for (Eigen::Index j = 0; j < 6; ++j) {
            const double xsq = Xs.col(j).squaredNorm() / n;
            const double rho = Xs.col(j).dot(residual) / n + xsq * beta(j);
            double updated = 0.0;
            if (rho > lambda) updated = (rho - lambda) / xsq;
            if (rho < -lambda) updated = (rho + lambda) / xsq;
            residual -= (updated - beta(j)) * Xs.col(j);
            beta(j) = updated;
        }
        const double current = objective(beta);
        CHECK(current <= previous + 1e-12);
        previous = current;
    }
    // and the library solution matches
    const Vector lib = lasso_coordinate_descent(Xs, yc, lambda);
    CHECK((lib - beta).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("lasso path: nonzero count is monotone in lambda on orthonormal designs") {
    const Eigen::Index n = 16;
    Matrix X(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
        X(i, 1) = (i % 4 < 2) ? 1.0 : -1.0;
        X(i, 2) = (i % 8 < 4) ? 1.0 : -1.0;
        X(i, 3) = (i < 8) ? 1.0 : -1.0;
    }
    Vector y = 2.0 * X.col(0) + 1.0 * X.col(1) + 0.5 * X.col(2) + 0.25 * X.col(3);
    std::size_t previous = 5;
    for (const double lambda : {0.01, 0.3, 0.6, 1.2, 2.5}) {
        const Vector beta = lasso_coordinate_descent(X, y, lambda);
        std::size_t nonzeros = 0;
        for (Eigen::Index j = 0; j < 4; ++j) nonzeros += beta(j) != 0.0;
        CHECK(nonzeros <= previous);
        previous = nonzeros;
    }
}

TEST_CASE("lasso_cv: planted sparse model recovered under the one-sd rule") {
    int both_found = 0;
    int sparse_enough = 0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed) * 13);
        const Eigen::Index n = 500;
        Matrix X = gaussian_matrix(rng, n, 20);
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = 3.0 * X(i, 0) - 2.0 * X(i, 4) + rng.normal(0, 0.5);
        }
        std::vector<std::string> names;
        for (int j = 1; j <= 20; ++j) names.push_back("x" + std::to_string(j));
        const LassoResult result = lasso_cv(X, y, names, {}, 10, static_cast<std::uint64_t>(seed));
        const std::set<std::string> nonzero(result.nonzero_terms.begin(),
                                            result.nonzero_terms.end());
        if (nonzero.count("x1") && nonzero.count("x5")) ++both_found;
        if (nonzero.size() <= 6) ++sparse_enough;
    }
    CHECK(both_found >= 18);
    CHECK(sparse_enough >= 18);
}

TEST_CASE("lasso_cv: pure noise selects almost nothing") {
    int worst = 0;
    for (int seed = 1; seed <= 5; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed) * 31);
        const Eigen::Index n = 200;
        Matrix X = gaussian_matrix(rng, n, 15);
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.normal(0, 1);
        std::vector<std::string> names;
        for (int j = 1; j <= 15; ++j) names.push_back("x" + std::to_string(j));
        const LassoResult result = lasso_cv(X, y, names, {}, 10, static_cast<std::uint64_t>(seed));
        worst = std::max(worst, static_cast<int>(result.nonzero_terms.size()));
    }
    CHECK(worst <= 2);
}

TEST_CASE("lasso_cv: coefficients return on the original variable scale") {
    Rng rng(12);
    const Eigen::Index n = 300;
    Matrix X(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = rng.normal(10, 5);     // wide scale
        X(i, 1) = rng.normal(0, 0.01);   // tiny scale
        X(i, 2) = rng.normal(-3, 1);
    }
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = 2.0 * X(i, 0) + rng.normal(0, 0.5);
    const LassoResult result = lasso_cv(X, y, {"a", "b", "c"}, {}, 5, 3);
    CHECK(std::fabs(result.coefficients[0] - 2.0) < 0.05);
    // prediction check in original units
    double mse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double pred = result.intercept;
        for (int j = 0; j < 3; ++j) pred += result.coefficients[static_cast<std::size_t>(j)] * X(i, j);
        mse += (y(i) - pred) * (y(i) - pred);
    }
    CHECK(mse / n < 1.0);
}

TEST_CASE("significance stars follow the Figure-8 convention") {
    CHECK(significance_stars(0.0001) == "***");
    CHECK(significance_stars(0.005) == "**");
    CHECK(significance_stars(0.03) == "*");
    CHECK(significance_stars(0.07) == ".");
    CHECK(significance_stars(0.5) == "");
}
