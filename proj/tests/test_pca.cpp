#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "firmprod/pca.hpp"
#include "firmprod/rng.hpp"
#include "test_helpers.hpp"

using namespace firmprod;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index n, Eigen::Index p, double spread = 1.0) {
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal(0.0, spread * (1.0 + j));
    }
    return m;
}

}  // namespace

TEST_CASE("fit_pca: perfectly collinear 2-D data") {
    Matrix m(5, 2);
    for (int i = 0; i < 5; ++i) {
        m(i, 0) = i - 2.0;
        m(i, 1) = i - 2.0;  // y = x
    }
    const PcaModel model = fit_pca(m, 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(model.loadings(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
    CHECK(model.loadings(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
    CHECK(model.variance_fractions[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fit_pca: diagonal covariance diag(4, 1)") {
    // Two centered orthogonal columns scaled to sample variances 4 and 1.
    const int n = 8;
    Matrix m(n, 2);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = (i % 2 == 0 ? 1.0 : -1.0) * 2.0;  // variance 4*(n/(n-1))
        m(i, 1) = (i % 4 < 2 ? 1.0 : -1.0) * 1.0;   // orthogonal pattern
    }
    // scale to exact sample variances
    const double v0 = m.col(0).squaredNorm() / (n - 1);
    const double v1 = m.col(1).squaredNorm() / (n - 1);
    m.col(0) *= 2.0 / std::sqrt(v0);
    m.col(1) *= 1.0 / std::sqrt(v1);
    const PcaModel model = fit_pca(m, 2);
    CHECK(model.eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(model.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::fabs(model.loadings(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::fabs(model.loadings(1, 1)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(model.variance_fractions[0] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(model.variance_fractions[1] == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("fit_pca: matches the jacobi eigendecomposition oracle on small instances") {
    Rng rng(101);
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<Eigen::Index>(3 + rng.below(4));  // 3..6 rows
        const auto p = static_cast<Eigen::Index>(2 + rng.below(5));  // 2..6 cols
        if (n - 1 < 1) continue;
        const Matrix m = random_matrix(rng, n, p);
        const int S = static_cast<int>(std::min<Eigen::Index>(n - 1, p));
        const PcaModel model = fit_pca(m, S);

        Matrix centered = m.rowwise() - m.colwise().mean();
        const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
        const auto [values, vectors] = oracle::jacobi_eig(cov);

        for (int s = 0; s < S; ++s) {
            CHECK(model.eigenvalues[static_cast<std::size_t>(s)] ==
                  doctest::Approx(values(s)).epsilon(1e-10));
            // sign-normalized loading comparison
            if (values(s) > 1e-12 &&
                (s + 1 >= static_cast<int>(values.size()) ||
                 values(s) - values(s + 1) > 1e-9)) {
                for (Eigen::Index j = 0; j < p; ++j) {
                    CHECK(std::fabs(model.loadings(j, s)) ==
                          doctest::Approx(std::fabs(vectors(j, s))).epsilon(1e-8));
                }
            }
        }
        // orthonormality of the loading columns
        const Matrix gram = model.loadings.transpose() * model.loadings;
        CHECK((gram - Matrix::Identity(S, S)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fit_pca: sign convention puts the largest loading entry positive") {
    Rng rng(7);
    const Matrix m = random_matrix(rng, 30, 4);
    const PcaModel model = fit_pca(m, 3);
    for (Eigen::Index s = 0; s < 3; ++s) {
        Eigen::Index argmax = 0;
        model.loadings.col(s).cwiseAbs().maxCoeff(&argmax);
        CHECK(model.loadings(argmax, s) > 0.0);
    }
}

TEST_CASE("fit_pca: too many components rejected") {
    Rng rng(8);
    const Matrix m = random_matrix(rng, 5, 3);
    CHECK_THROWS_AS(fit_pca(m, 5), TooManyComponents);
}

TEST_CASE("project: score variances equal eigenvalues on training data") {
    Rng rng(11);
    const Matrix m = random_matrix(rng, 60, 5);
    const PcaModel model = fit_pca(m, 4);
    const Matrix scores = project(model, m);
    for (int s = 0; s < 4; ++s) {
        const double var = scores.col(s).squaredNorm() / (m.rows() - 1);
        CHECK(var == doctest::Approx(model.eigenvalues[static_cast<std::size_t>(s)])
                         .epsilon(1e-8));
    }
    // score columns mutually orthogonal on training data
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            CHECK(std::fabs(scores.col(a).dot(scores.col(b))) < 1e-8 * m.rows());
        }
    }
}

TEST_CASE("project: the mean row maps to the zero score") {
    Rng rng(13);
    const Matrix m = random_matrix(rng, 25, 3);
    const PcaModel model = fit_pca(m, 2);
    Matrix mean_row(1, 3);
    for (int j = 0; j < 3; ++j) mean_row(0, j) = m.col(j).mean();
    const Matrix score = project(model, mean_row);
    CHECK(score.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("project: single feature, single component") {
    Matrix m(6, 1);
    m << 1, 2, 3, 4, 5, 6;
    const PcaModel model = fit_pca(m, 1);
    const Matrix scores = project(model, m);
    for (int i = 0; i < 6; ++i) {
        CHECK(std::fabs(scores(i, 0)) == doctest::Approx(std::fabs(m(i, 0) - 3.5)).epsilon(1e-10));
    }
}

TEST_CASE("project: schema mismatch rejected") {
    Rng rng(14);
    const Matrix m = random_matrix(rng, 10, 3);
    const PcaModel model = fit_pca(m, 2, {"a", "b", "c"});
    const Matrix wrong = random_matrix(rng, 4, 2);
    CHECK_THROWS_AS(project(model, wrong), SchemaMismatch);
    CHECK_THROWS_AS(project(model, m, {"a", "b", "x"}), SchemaMismatch);
}

TEST_CASE("full-rank reconstruction reproduces the centered matrix") {
    Rng rng(15);
    const Matrix m = random_matrix(rng, 12, 5);
    const int S = 5;  // min(n-1, p)
    const PcaModel model = fit_pca(m, S);
    const Matrix centered = m.rowwise() - m.colwise().mean();
    const Matrix reconstructed = project(model, m) * model.loadings.transpose();
    CHECK((reconstructed - centered).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_pca is deterministic") {
    Rng rng(16);
    const Matrix m = random_matrix(rng, 40, 6);
    const PcaModel a = fit_pca(m, 4);
    const PcaModel b = fit_pca(m, 4);
    CHECK((a.loadings - b.loadings).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t s = 0; s < a.eigenvalues.size(); ++s) {
        CHECK(a.eigenvalues[s] == b.eigenvalues[s]);
    }
}

TEST_CASE("loading_correlations: collinear features correlate fully with PC1") {
    Matrix m(20, 2);
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.normal(0, 1);
        m(i, 0) = x;
        m(i, 1) = 2.0 * x;
    }
    const PcaModel model = fit_pca(m, 1, {"a", "b"});
    const auto correlations = loading_correlations(model, m);
    REQUIRE(correlations.size() == 1);
    CHECK(std::fabs(correlations[0].all[0]) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::fabs(correlations[0].all[1]) == doctest::Approx(1.0).epsilon(1e-10));
    // both features land on the same signed side
    CHECK(correlations[0].top_positive.size() + correlations[0].top_negative.size() == 2);
}

TEST_CASE("loading_correlations: orthogonal feature excluded from the tops") {
    // Feature 2 alternates independently of feature 0/1's common factor.
    Matrix m(8, 3);
    for (int i = 0; i < 8; ++i) {
        const double x = (i < 4 ? 1.0 : -1.0);
        m(i, 0) = x;
        m(i, 1) = x;
        m(i, 2) = (i % 2 == 0 ? 1.0 : -1.0);
    }
    const PcaModel model = fit_pca(m, 1, {"a", "b", "noise"});
    const auto correlations = loading_correlations(model, m);
    CHECK(std::fabs(correlations[0].all[2]) < 1e-10);
    for (const auto& [name, value] : correlations[0].top_positive) CHECK(name != "noise");
    for (const auto& [name, value] : correlations[0].top_negative) CHECK(name != "noise");
}
