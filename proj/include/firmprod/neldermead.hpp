#pragma once

#include <functional>
#include <vector>

#include "firmprod/common.hpp"

namespace firmprod {

struct MinimizeResult {
    Vector argmin;
    double value = 0.0;
    int iterations = 0;       // iterations of the winning start
    int total_iterations = 0; // summed over all starts
    bool converged = false;
};

using Objective = std::function<double(const Vector&)>;

// Simplex descent from a single start. Converged when the spread of the
// simplex values falls below tol.
MinimizeResult nelder_mead(const Objective& objective, const Vector& start, double tol,
                           int max_iter);

// Runs a simplex search from every start and returns the best terminal
// point; throws OptimizerDidNotConverge when no start converged.
MinimizeResult minimize_derivative_free(const Objective& objective,
                                        const std::vector<Vector>& starts, double tol,
                                        int max_iter);

}  // namespace firmprod
