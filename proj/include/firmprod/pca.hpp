#pragma once

#include <string>
#include <vector>

#include "firmprod/common.hpp"
#include "firmprod/panel.hpp"

namespace firmprod {

struct PcaModel {
    Matrix loadings;                  // p x S, unit-norm orthogonal columns
    std::vector<double> eigenvalues;  // descending, singular_value^2 / (n-1)
    std::vector<double> variance_fractions;
    std::vector<std::string> column_names;
    StandardizationParams standardization;  // params of the fitted space
    std::vector<double> column_means;  // centering used for projection
};

// Top-S right singular vectors of the centered matrix. Sign convention:
// the largest-magnitude entry of each loading column is positive.
PcaModel fit_pca(const Matrix& matrix, int n_components,
                 const std::vector<std::string>& column_names = {});

// Scores of rows already living in the fitted space.
Matrix project(const PcaModel& model, const Matrix& matrix,
               const std::vector<std::string>& column_names = {});

struct ImputationResult {
    Matrix completed;
    int n_iterations = 0;
    double final_change = 0.0;
    int rank = 0;
    bool converged = true;
};

// Iterative regularized PCA completion: missing cells start at the column
// mean (zero after standardization) and are refilled from a rank-S
// reconstruction with noise-shrunk singular values until the squared change
// at missing cells falls below tol.
ImputationResult iterative_impute(const Matrix& matrix, int n_components, double tol = 1e-6,
                                  int max_iter = 1000);

struct ComponentCorrelations {
    int component = 0;
    std::vector<std::pair<std::string, double>> top_positive;  // up to 3
    std::vector<std::pair<std::string, double>> top_negative;  // up to 3
    std::vector<double> all;  // per input column, aligned with column_names
};

// Pearson correlation of every original column with each score column.
std::vector<ComponentCorrelations> loading_correlations(const PcaModel& model,
                                                        const Matrix& matrix);

}  // namespace firmprod
