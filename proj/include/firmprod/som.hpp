#pragma once

#include <cstdint>
#include <vector>

#include "firmprod/common.hpp"

namespace firmprod {

struct SomConfig {
    int rows = 0;  // 0 = choose from the data (Kohonen 5*sqrt(n) heuristic)
    int cols = 0;
    int epochs = 200;
    double lr_start = 0.5;
    double lr_end = 0.01;
    double radius_start = 0.0;  // 0 = max(rows, cols) / 2
    double radius_end = 0.5;
    std::uint64_t seed = 1;
};

struct SomModel {
    Matrix codebook;  // (rows*cols) x d, row-major over the grid
    std::vector<int> assignments;
    SomConfig config;  // resolved values (grid size, radii filled in)
    int input_dim = 0;
    double initial_quantization_error = 0.0;
    double quantization_error = 0.0;
};

// Grid size heuristic: about 5*sqrt(n) nodes with the aspect ratio of the
// top two data eigenvalues.
std::pair<int, int> suggest_grid(const Matrix& matrix);

SomModel train_som(const Matrix& matrix, SomConfig config);

int best_matching_unit(const SomModel& model, const Vector& vector);

// Mean codebook distance to the 4-neighbourhood, per node.
Matrix u_matrix(const SomModel& model);

struct ComponentPlanes {
    std::vector<Matrix> planes;  // one rows x cols grid per input dimension
    Eigen::MatrixXi counts;      // assignment counts per node
};

ComponentPlanes component_planes(const SomModel& model);

}  // namespace firmprod
