#pragma once

#include <string>
#include <vector>

#include "firmprod/common.hpp"

namespace firmprod {

// All monomials of total degree <= degree over the input columns, intercept
// included. Column order is graded lexicographic: ascending total degree,
// and within a degree descending powers of the earlier columns, so two
// columns (x, y) at degree 2 give [1, x, y, x^2, x*y, y^2].
Matrix polynomial_series(const Matrix& columns, int degree);

// Exponent tuples in the same order as the columns of polynomial_series.
std::vector<std::vector<int>> polynomial_exponents(int n_vars, int degree);

struct OlsFit {
    Vector coefficients;
    Vector residuals;
    Vector fitted;
    Vector standard_errors;
    double sigma2 = 0.0;     // s^2 = SSR / (n - p)
    double r_squared = 0.0;  // centered R^2
    Eigen::Index n = 0;
    Eigen::Index p = 0;
};

// Least squares via column-pivoted QR; throws RankDeficient naming the first
// redundant column and TooFewRows when n <= p.
OlsFit ols(const Matrix& X, const Vector& y);

// Coefficients only, by normal equations; no rank diagnostics. For hot loops
// where X is known well-conditioned.
Vector ols_coefficients_fast(const Matrix& X, const Vector& y);

}  // namespace firmprod
