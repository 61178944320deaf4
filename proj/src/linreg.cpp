#include "firmprod/linreg.hpp"

#include <cmath>

namespace firmprod {

namespace {

void enumerate_exponents(int n_vars, int degree, int var, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
    if (var == n_vars - 1) {
        current[var] = degree;
        out.push_back(current);
        return;
    }
    for (int e = degree; e >= 0; --e) {
        current[var] = e;
        enumerate_exponents(n_vars, degree - e, var + 1, current, out);
    }
}

}  // namespace

std::vector<std::vector<int>> polynomial_exponents(int n_vars, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(n_vars, 0);
    for (int d = 0; d <= degree; ++d) {
        enumerate_exponents(n_vars, d, 0, current, out);
    }
    return out;
}

Matrix polynomial_series(const Matrix& columns, int degree) {
    if (degree < 1) throw Error("polynomial_series: degree must be >= 1");
    if (degree > 5) throw DegreeTooHigh("polynomial_series: degree capped at 5");
    if (columns.hasNaN()) throw Error("polynomial_series: missing entries not allowed");

    const auto exponents = polynomial_exponents(static_cast<int>(columns.cols()), degree);
    Matrix design(columns.rows(), static_cast<Eigen::Index>(exponents.size()));
    for (std::size_t t = 0; t < exponents.size(); ++t) {
        Vector term = Vector::Ones(columns.rows());
        for (int v = 0; v < static_cast<int>(exponents[t].size()); ++v) {
            for (int e = 0; e < exponents[t][v]; ++e) {
                term = term.cwiseProduct(columns.col(v));
            }
        }
        design.col(static_cast<Eigen::Index>(t)) = term;
    }
    return design;
}

OlsFit ols(const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw Error("ols: row mismatch");
    if (X.rows() <= X.cols()) throw TooFewRows("ols: need rows > cols");

    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) {
        // First original column outside the pivoted leading block.
        const auto perm = qr.colsPermutation().indices();
        Eigen::Index offender = perm(qr.rank());
        for (Eigen::Index i = qr.rank(); i < X.cols(); ++i) {
            offender = std::min<Eigen::Index>(offender, perm(i));
        }
        throw RankDeficient("ols: rank-deficient design, column " + std::to_string(offender));
    }

    OlsFit fit;
    fit.n = X.rows();
    fit.p = X.cols();
    fit.coefficients = qr.solve(y);
    fit.fitted = X * fit.coefficients;
    fit.residuals = y - fit.fitted;

    const double ssr = fit.residuals.squaredNorm();
    fit.sigma2 = ssr / static_cast<double>(fit.n - fit.p);
    const Matrix xtx_inv =
        (X.transpose() * X).ldlt().solve(Matrix::Identity(X.cols(), X.cols()));
    fit.standard_errors = (fit.sigma2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();

    const double y_mean = y.mean();
    const double tss = (y.array() - y_mean).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 1.0;
    return fit;
}

Vector ols_coefficients_fast(const Matrix& X, const Vector& y) {
    return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

}  // namespace firmprod
