#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "firmprod/common.hpp"

namespace firmprod {

struct RegressionReport {
    std::vector<std::string> terms;
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    std::vector<double> t_stats;
    std::vector<double> p_values;
    std::size_t n = 0;
    double r_squared = 0.0;
    std::optional<int> subsample;  // cluster id for within-cluster runs
    bool controls_included = false;
};

// Categorical control: a name plus one value per observation. The first
// level alphabetically is the dropped reference.
struct CategoricalControl {
    std::string name;
    std::vector<std::string> values;
};

RegressionReport pcr(const Vector& tfp_growth, const Matrix& scores,
                     const std::vector<std::string>& score_names = {},
                     const std::vector<CategoricalControl>& controls = {});

struct PcrSkip {
    int cluster = 0;
    std::size_t n = 0;
    std::string reason;
};

struct PcrByCluster {
    std::vector<RegressionReport> reports;
    std::vector<PcrSkip> skipped;  // clusters with n < p + 5
};

PcrByCluster pcr_by_cluster(const Vector& tfp_growth, const Matrix& scores,
                            const std::vector<int>& labels,
                            const std::vector<std::string>& score_names = {},
                            const std::vector<CategoricalControl>& controls = {});

// Cyclic coordinate descent with soft-thresholding for
// (1/2n)||y - X b||^2 + lambda * ||b||_1; X columns unit-variance, y centered.
Vector lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda,
                                double coef_tol = 1e-7, int max_sweeps = 10000);

double lasso_lambda_max(const Matrix& X, const Vector& y);

enum class LassoRule { OneSd, Min };

struct LassoResult {
    double lambda = 0.0;
    double intercept = 0.0;
    std::vector<double> coefficients;  // original variable scale
    std::vector<std::string> nonzero_terms;
    std::vector<double> cv_lambdas;
    std::vector<double> cv_mean_mse;
    std::vector<double> cv_se_mse;  // standard error over folds
    LassoRule selected_rule = LassoRule::OneSd;
};

LassoResult lasso_cv(const Matrix& X, const Vector& y,
                     const std::vector<std::string>& term_names,
                     std::vector<double> lambda_grid = {}, int folds = 10,
                     std::uint64_t seed = 1, LassoRule rule = LassoRule::OneSd);

// Significance stars: *** p<0.001, ** p<0.01, * p<0.05, . p<0.1.
std::string significance_stars(double p);

}  // namespace firmprod
