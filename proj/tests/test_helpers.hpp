#pragma once

// Test-only oracles, deliberately independent of the library code paths they
// check: a Jacobi eigensolver for PCA, adaptive Simpson for the Student-t
// tail, and exhaustive partition search for k-means.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "firmprod/common.hpp"

namespace oracle {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues
// descending with matching eigenvectors in columns.
inline std::pair<firmprod::Vector, firmprod::Matrix> jacobi_eig(firmprod::Matrix a) {
    const Eigen::Index n = a.rows();
    firmprod::Matrix v = firmprod::Matrix::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (off < 1e-24) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                firmprod::Matrix rot = firmprod::Matrix::Identity(n, n);
                rot(p, p) = c;
                rot(q, q) = c;
                rot(p, q) = s;
                rot(q, p) = -s;
                a = rot.transpose() * a * rot;
                v = v * rot;
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
    firmprod::Vector values(n);
    firmprod::Matrix vectors(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return {values, vectors};
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth = 24) {
    const double c = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fc = f(c);
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fhi, double fmid, double whole,
            int level) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (level <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, fmid, flm, left, level - 1) +
               rec(mid, hi, fmid, fhi, frm, right, level - 1);
    };
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    return rec(a, b, fa, fb, fc, whole, depth);
}

// Two-sided Student-t tail probability by quadrature over the density.
inline double t_two_sided_p_quadrature(double t, double nu) {
    const double abs_t = std::fabs(t);
    const double log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * 3.14159265358979323846);
    auto density = [&](double x) {
        return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
    };
    // Integrate the central region and subtract from 1.
    const double central = adaptive_simpson(density, -abs_t, abs_t, 1e-12);
    return std::max(0.0, 1.0 - central);
}

// Exhaustive minimum within-cluster sum of squares over all k-labelings.
inline double brute_force_wss(const firmprod::Matrix& points, int k) {
    const Eigen::Index n = points.rows();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::Index)> rec = [&](Eigen::Index i) {
        if (i == n) {
            double wss = 0.0;
            for (int c = 0; c < k; ++c) {
                Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
                int count = 0;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (labels[static_cast<std::size_t>(r)] == c) {
                        mean += points.row(r);
                        ++count;
                    }
                }
                if (count == 0) continue;
                mean /= count;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (labels[static_cast<std::size_t>(r)] == c) {
                        wss += (points.row(r) - mean).squaredNorm();
                    }
                }
            }
            best = std::min(best, wss);
            return;
        }
        for (int c = 0; c < k; ++c) {
            labels[static_cast<std::size_t>(i)] = c;
            rec(i + 1);
        }
    };
    rec(0);
    return best;
}

}  // namespace oracle
