#include "firmprod/som.hpp"

#include <algorithm>
#include <cmath>

#include "firmprod/pca.hpp"
#include "firmprod/rng.hpp"

namespace firmprod {

namespace {

int bmu_index(const Matrix& codebook, const Eigen::RowVectorXd& x) {
    int best = 0;
    double best_dist = (codebook.row(0) - x).squaredNorm();
    for (Eigen::Index node = 1; node < codebook.rows(); ++node) {
        const double dist = (codebook.row(node) - x).squaredNorm();
        if (dist < best_dist) {  // ties keep the lowest index
            best_dist = dist;
            best = static_cast<int>(node);
        }
    }
    return best;
}

double quantization_error(const Matrix& codebook, const Matrix& data) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const int node = bmu_index(codebook, data.row(i));
        total += (codebook.row(node) - data.row(i)).norm();
    }
    return total / static_cast<double>(data.rows());
}

}  // namespace

std::pair<int, int> suggest_grid(const Matrix& matrix) {
    const double n = static_cast<double>(matrix.rows());
    const double nodes = 5.0 * std::sqrt(n);
    double aspect = 1.0;
    if (matrix.cols() >= 2 && matrix.rows() >= 3) {
        const PcaModel pca = fit_pca(matrix, 2);
        if (pca.eigenvalues[1] > 0.0) {
            aspect = std::sqrt(pca.eigenvalues[0] / pca.eigenvalues[1]);
        }
    }
    aspect = std::clamp(aspect, 1.0, 4.0);
    int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(nodes * aspect))));
    int cols = std::max(1, static_cast<int>(std::lround(nodes / rows)));
    return {rows, cols};
}

SomModel train_som(const Matrix& matrix, SomConfig config) {
    const Eigen::Index n = matrix.rows();
    const Eigen::Index d = matrix.cols();
    if (n < 1 || d < 1) throw EmptyInput("train_som: empty input");
    if (config.rows <= 0 || config.cols <= 0) {
        const auto [r, c] = suggest_grid(matrix);
        config.rows = r;
        config.cols = c;
    }
    if (config.epochs < 1) throw Error("train_som: epochs must be >= 1");
    if (config.radius_start <= 0.0) {
        config.radius_start = std::max(1.0, std::max(config.rows, config.cols) / 2.0);
    }
    config.radius_end = std::min(config.radius_end, config.radius_start);
    if (config.radius_end <= 0.0) config.radius_end = 0.5;

    const int n_nodes = config.rows * config.cols;
    Rng rng = Rng::stream(config.seed, "som");

    // Codebook seeded by sampling input rows; without replacement while the
    // sample lasts.
    Matrix codebook(n_nodes, d);
    if (n >= n_nodes) {
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<Eigen::Index>(i);
        rng.shuffle(pool);
        for (int node = 0; node < n_nodes; ++node) {
            codebook.row(node) = matrix.row(pool[static_cast<std::size_t>(node)]);
        }
    } else {
        for (int node = 0; node < n_nodes; ++node) {
            codebook.row(node) = matrix.row(static_cast<Eigen::Index>(rng.below(n)));
        }
    }

    SomModel model;
    model.input_dim = static_cast<int>(d);
    model.initial_quantization_error = quantization_error(codebook, matrix);

    auto node_row = [&](int node) { return node / config.cols; };
    auto node_col = [&](int node) { return node % config.cols; };

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double progress =
            config.epochs > 1 ? static_cast<double>(epoch) / (config.epochs - 1) : 0.0;
        const double lr = config.lr_start + (config.lr_end - config.lr_start) * progress;
        const double radius =
            config.radius_start + (config.radius_end - config.radius_start) * progress;
        const double radius2 = radius * radius;

        rng.shuffle(order);
        for (const Eigen::Index obs : order) {
            const int best = bmu_index(codebook, matrix.row(obs));
            const int br = node_row(best), bc = node_col(best);
            const int reach = static_cast<int>(std::floor(radius));
            const int r_lo = std::max(0, br - reach), r_hi = std::min(config.rows - 1, br + reach);
            const int c_lo = std::max(0, bc - reach), c_hi = std::min(config.cols - 1, bc + reach);
            for (int r = r_lo; r <= r_hi; ++r) {
                for (int c = c_lo; c <= c_hi; ++c) {
                    const double grid_d2 = static_cast<double>((r - br) * (r - br) +
                                                               (c - bc) * (c - bc));
                    if (grid_d2 > radius2) continue;
                    const double weight = lr * std::exp(-grid_d2 / (2.0 * radius2));
                    const int node = r * config.cols + c;
                    codebook.row(node) += weight * (matrix.row(obs) - codebook.row(node));
                }
            }
        }
    }

    model.codebook = std::move(codebook);
    model.config = config;
    model.assignments.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        model.assignments[static_cast<std::size_t>(i)] = bmu_index(model.codebook, matrix.row(i));
    }
    model.quantization_error = quantization_error(model.codebook, matrix);
    return model;
}

int best_matching_unit(const SomModel& model, const Vector& vector) {
    if (vector.size() != model.codebook.cols()) {
        throw DimensionMismatch("best_matching_unit: vector length != codebook width");
    }
    return bmu_index(model.codebook, vector.transpose());
}

Matrix u_matrix(const SomModel& model) {
    const int rows = model.config.rows, cols = model.config.cols;
    Matrix um(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Eigen::Index node = r * cols + c;
            double sum = 0.0;
            int count = 0;
            const int dr[] = {-1, 1, 0, 0};
            const int dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k], nc = c + dc[k];
                if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                const Eigen::Index other = nr * cols + nc;
                sum += (model.codebook.row(node) - model.codebook.row(other)).norm();
                ++count;
            }
            um(r, c) = count > 0 ? sum / count : 0.0;
        }
    }
    return um;
}

ComponentPlanes component_planes(const SomModel& model) {
    const int rows = model.config.rows, cols = model.config.cols;
    ComponentPlanes out;
    for (int j = 0; j < model.input_dim; ++j) {
        Matrix plane(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) plane(r, c) = model.codebook(r * cols + c, j);
        }
        out.planes.push_back(std::move(plane));
    }
    out.counts = Eigen::MatrixXi::Zero(rows, cols);
    for (const int node : model.assignments) {
        out.counts(node / cols, node % cols) += 1;
    }
    return out;
}

}  // namespace firmprod
