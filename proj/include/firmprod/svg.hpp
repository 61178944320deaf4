#pragma once

#include <string>

#include "firmprod/common.hpp"

namespace firmprod::svg {

// Self-contained grid heatmap: one rect per cell on a linear grey colormap,
// value range annotated under the title.
std::string heatmap(const Matrix& grid, const std::string& title);

void write_heatmap(const std::string& path, const Matrix& grid, const std::string& title);

}  // namespace firmprod::svg
