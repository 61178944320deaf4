#include "firmprod/neldermead.hpp"

#include <algorithm>
#include <cmath>

namespace firmprod {

MinimizeResult nelder_mead(const Objective& objective, const Vector& start, double tol,
                           int max_iter) {
    const Eigen::Index d = start.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<Vector> xs(static_cast<std::size_t>(d) + 1, start);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double h = 0.05 * std::max(1.0, std::fabs(start(i)));
        xs[static_cast<std::size_t>(i) + 1](i) += h;
    }
    std::vector<double> fs;
    fs.reserve(xs.size());
    for (const auto& x : xs) fs.push_back(objective(x));

    MinimizeResult res;
    auto order = [&] {
        std::vector<std::size_t> idx(xs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return fs[a] < fs[b];
        });
        std::vector<Vector> xs2;
        std::vector<double> fs2;
        for (std::size_t i : idx) {
            xs2.push_back(xs[i]);
            fs2.push_back(fs[i]);
        }
        xs = std::move(xs2);
        fs = std::move(fs2);
    };

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        order();
        // Value spread alone stalls on simplexes straddling the optimum, so
        // the simplex diameter must have collapsed as well.
        double diameter = 0.0;
        for (std::size_t i = 1; i < xs.size(); ++i) {
            diameter = std::max(diameter, (xs[i] - xs.front()).norm());
        }
        const double scale = 1.0 + xs.front().norm();
        if (fs.back() - fs.front() < tol && diameter < std::sqrt(tol) * scale) {
            res.converged = true;
            break;
        }
        Vector centroid = Vector::Zero(d);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) centroid += xs[i];
        centroid /= static_cast<double>(d);

        const Vector reflected = centroid + alpha * (centroid - xs.back());
        const double f_reflected = objective(reflected);
        if (f_reflected < fs.front()) {
            const Vector expanded = centroid + gamma * (reflected - centroid);
            const double f_expanded = objective(expanded);
            if (f_expanded < f_reflected) {
                xs.back() = expanded;
                fs.back() = f_expanded;
            } else {
                xs.back() = reflected;
                fs.back() = f_reflected;
            }
            continue;
        }
        if (f_reflected < fs[fs.size() - 2]) {
            xs.back() = reflected;
            fs.back() = f_reflected;
            continue;
        }
        const Vector contracted = centroid + rho * (xs.back() - centroid);
        const double f_contracted = objective(contracted);
        if (f_contracted < fs.back()) {
            xs.back() = contracted;
            fs.back() = f_contracted;
            continue;
        }
        for (std::size_t i = 1; i < xs.size(); ++i) {
            xs[i] = xs.front() + sigma * (xs[i] - xs.front());
            fs[i] = objective(xs[i]);
        }
    }
    order();
    res.argmin = xs.front();
    res.value = fs.front();
    res.iterations = iter;
    res.total_iterations = iter;
    return res;
}

MinimizeResult minimize_derivative_free(const Objective& objective,
                                        const std::vector<Vector>& starts, double tol,
                                        int max_iter) {
    if (starts.empty()) throw Error("minimize_derivative_free: no starts");
    for (const auto& s : starts) {
        if (!std::isfinite(objective(s))) {
            throw Error("minimize_derivative_free: objective not finite at a start");
        }
    }
    MinimizeResult best;
    bool have_best = false;
    int total = 0;
    bool any_converged = false;
    for (const auto& s : starts) {
        MinimizeResult r = nelder_mead(objective, s, tol, max_iter);
        total += r.total_iterations;
        any_converged = any_converged || r.converged;
        if (!have_best || r.value < best.value) {
            best = r;
            have_best = true;
        }
    }
    if (!any_converged) {
        throw OptimizerDidNotConverge("no simplex start met tol within max_iter");
    }
    best.total_iterations = total;
    return best;
}

}  // namespace firmprod
