#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "firmprod/stats.hpp"
#include "test_helpers.hpp"

using namespace firmprod;

TEST_CASE("percentile: type-7 interpolation on 1..100") {
    std::vector<double> xs;
    for (int i = 1; i <= 100; ++i) xs.push_back(i);
    // h = 99 * 0.85 = 84.15 -> x[84] + 0.15 * (x[85] - x[84]) = 85.15
    CHECK(stats::percentile(xs, 0.85) == doctest::Approx(85.15).epsilon(1e-12));
    CHECK(stats::percentile(xs, 0.0) == doctest::Approx(1.0));
    CHECK(stats::percentile(xs, 1.0) == doctest::Approx(100.0));
}

TEST_CASE("percentile: single value") {
    CHECK(stats::percentile({7.0}, 0.85) == doctest::Approx(7.0));
}

TEST_CASE("sample_sd: undefined for n < 2") {
    CHECK(!stats::sample_sd({7.0}).has_value());
    CHECK(*stats::sample_sd({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
}

TEST_CASE("incomplete beta: reference identities") {
    // I_x(1, 1) = x
    CHECK(stats::incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    // I_x(a, b) + I_{1-x}(b, a) = 1
    const double lhs = stats::incomplete_beta(2.5, 3.5, 0.4);
    const double rhs = stats::incomplete_beta(3.5, 2.5, 0.6);
    CHECK(lhs + rhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats::incomplete_beta(2.0, 5.0, 0.0) == 0.0);
    CHECK(stats::incomplete_beta(2.0, 5.0, 1.0) == 1.0);
}

TEST_CASE("t two-sided p matches the quadrature oracle") {
    const double cases[][2] = {
        {-2.2360679774997896, 18.0},  // the textbook Welch pair below
        {1.0, 5.0}, {2.5, 3.0}, {0.5, 30.0}, {3.2, 12.5},
    };
    for (const auto& c : cases) {
        const double expect = oracle::t_two_sided_p_quadrature(c[0], c[1]);
        CHECK(stats::t_two_sided_p(c[0], c[1]) == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(stats::t_two_sided_p(0.0, 10.0) == doctest::Approx(1.0));
}

TEST_CASE("welch test: textbook pair") {
    // n1 = n2 = 10, means 5 and 6, both sds exactly 1.
    std::vector<double> a, b;
    const double base[] = {-1.3801311186847085, -0.9, -0.5, -0.3, -0.1,
                           0.1, 0.3, 0.5, 0.9, 1.3801311186847085};
    // base has mean 0; scale so the sample sd is exactly 1.
    std::vector<double> unit(std::begin(base), std::end(base));
    const double sd = *stats::sample_sd(unit);
    for (double v : unit) {
        a.push_back(5.0 + v / sd);
        b.push_back(6.0 + v / sd);
    }
    const auto r = stats::welch_t_test(a, b);
    CHECK(r.t == doctest::Approx(-2.2360679774997896).epsilon(1e-9));
    CHECK(r.dof == doctest::Approx(18.0).epsilon(1e-9));
    const double expect = oracle::t_two_sided_p_quadrature(r.t, r.dof);
    CHECK(r.p == doctest::Approx(expect).epsilon(1e-8));
    CHECK(r.p == doctest::Approx(0.0382).epsilon(2e-3));
}

TEST_CASE("welch test: identical samples give p = 1") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    const auto r = stats::welch_t_test(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
}

TEST_CASE("welch test: extreme separation") {
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(0.0 + 1e-6 * i);
        b.push_back(10.0 + 1e-6 * i);
    }
    CHECK(stats::welch_t_test(a, b).p < 1e-10);
}

TEST_CASE("normal cdf: symmetry and reference values") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(stats::normal_cdf(-1.0) + stats::normal_cdf(1.0) == doctest::Approx(1.0));
}
