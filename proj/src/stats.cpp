#include "firmprod/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "firmprod/common.hpp"

namespace firmprod::stats {

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

std::optional<double> sample_sd(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return std::nullopt;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw Error("percentile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double frac = h - std::floor(h);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

namespace {

// Lentz continued fraction for the incomplete beta.
double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-30;
    constexpr double kEps = 1e-15;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw Error("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double nu) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    const double x = nu / (nu + t * t);
    return incomplete_beta(nu / 2.0, 0.5, x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

WelchTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n1 = static_cast<double>(a.size());
    const auto n2 = static_cast<double>(b.size());
    if (a.size() < 2 || b.size() < 2) throw Error("welch_t_test: each sample needs >= 2 values");
    const double m1 = mean(a);
    const double m2 = mean(b);
    const double v1 = *sample_sd(a) * *sample_sd(a);
    const double v2 = *sample_sd(b) * *sample_sd(b);

    WelchTest out;
    if (m1 == m2) {
        // Degenerate variances would otherwise give 0/0.
        out.t = 0.0;
        out.dof = n1 + n2 - 2.0;
        out.p = 1.0;
        return out;
    }
    const double se2 = v1 / n1 + v2 / n2;
    if (se2 == 0.0) {
        out.t = std::numeric_limits<double>::infinity() * (m1 > m2 ? 1.0 : -1.0);
        out.dof = n1 + n2 - 2.0;
        out.p = 0.0;
        return out;
    }
    out.t = (m1 - m2) / std::sqrt(se2);
    out.dof = se2 * se2 /
              (v1 * v1 / (n1 * n1 * (n1 - 1.0)) + v2 * v2 / (n2 * n2 * (n2 - 1.0)));
    out.p = t_two_sided_p(out.t, out.dof);
    return out;
}

}  // namespace firmprod::stats
