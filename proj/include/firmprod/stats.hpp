#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace firmprod::stats {

double mean(const std::vector<double>& xs);
// Sample standard deviation (n-1 denominator); empty for n < 2.
std::optional<double> sample_sd(const std::vector<double>& xs);

// Type-7 order-statistic interpolation: h = (n-1)*p, linear between
// neighbouring order statistics. p in [0, 1].
double percentile(std::vector<double> xs, double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided survival probability of Student's t: P(|T_nu| >= |t|).
double t_two_sided_p(double t, double nu);

// Standard normal CDF.
double normal_cdf(double x);

struct WelchTest {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;
};

// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
WelchTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace firmprod::stats
