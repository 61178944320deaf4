#include "firmprod/pca.hpp"

#include <algorithm>
#include <cmath>

#include "firmprod/stats.hpp"

namespace firmprod {

PcaModel fit_pca(const Matrix& matrix, int n_components,
                 const std::vector<std::string>& column_names) {
    const Eigen::Index n = matrix.rows();
    const Eigen::Index p = matrix.cols();
    if (matrix.hasNaN()) throw Error("fit_pca: missing entries not allowed");
    if (n_components < 1 || n_components > std::min<Eigen::Index>(n - 1, p)) {
        throw TooManyComponents("fit_pca: need 1 <= S <= min(n-1, p)");
    }

    PcaModel model;
    model.column_names = column_names;
    if (model.column_names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) model.column_names.push_back("V" + std::to_string(j + 1));
    }
    Matrix centered = matrix;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = matrix.col(j).mean();
        model.column_means.push_back(mean);
        centered.col(j).array() -= mean;
    }
    // Identity standardization by default; callers that standardized first
    // overwrite this with the real parameters.
    model.standardization.means.assign(static_cast<std::size_t>(p), 0.0);
    model.standardization.sds.assign(static_cast<std::size_t>(p), 1.0);

    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();

    const double total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
    model.loadings = Matrix(p, n_components);
    for (int s = 0; s < n_components; ++s) {
        Vector col = svd.matrixV().col(s);
        Eigen::Index argmax = 0;
        col.cwiseAbs().maxCoeff(&argmax);
        if (col(argmax) < 0.0) col = -col;
        model.loadings.col(s) = col;
        const double eig = sv(s) * sv(s) / static_cast<double>(n - 1);
        model.eigenvalues.push_back(eig);
        model.variance_fractions.push_back(total_variance > 0.0 ? eig / total_variance : 0.0);
    }
    return model;
}

Matrix project(const PcaModel& model, const Matrix& matrix,
               const std::vector<std::string>& column_names) {
    if (matrix.cols() != model.loadings.rows()) {
        throw SchemaMismatch("project: column count differs from the fitted model");
    }
    if (!column_names.empty() && column_names != model.column_names) {
        throw SchemaMismatch("project: column names differ from the fitted model");
    }
    Matrix centered = matrix;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        centered.col(j).array() -= model.column_means[static_cast<std::size_t>(j)];
    }
    return centered * model.loadings;
}

ImputationResult iterative_impute(const Matrix& matrix, int n_components, double tol,
                                  int max_iter) {
    const Eigen::Index n = matrix.rows();
    const Eigen::Index p = matrix.cols();
    if (n_components < 1 || n_components > p - 1) {
        throw TooManyComponents("iterative_impute: need 1 <= S <= p-1");
    }

    std::vector<std::pair<Eigen::Index, Eigen::Index>> missing;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index row_observed = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (is_missing(matrix(i, j))) {
                missing.emplace_back(i, j);
            } else {
                ++row_observed;
            }
        }
        if (row_observed == 0) {
            throw AllMissingRow("iterative_impute: row " + std::to_string(i) + " fully missing");
        }
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::Index observed = 0;
        for (Eigen::Index i = 0; i < n; ++i) observed += !is_missing(matrix(i, j));
        if (observed < 2) {
            throw ConstantColumn("iterative_impute: column " + std::to_string(j) +
                                 " has fewer than 2 observed values");
        }
    }

    ImputationResult result;
    result.rank = n_components;
    result.completed = matrix;
    if (missing.empty()) {
        result.n_iterations = 0;
        result.final_change = 0.0;
        return result;
    }

    // Initial fill: the column mean, which is zero in a standardized matrix.
    for (const auto& [i, j] : missing) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (!is_missing(matrix(r, j))) {
                sum += matrix(r, j);
                ++count;
            }
        }
        result.completed(i, j) = sum / static_cast<double>(count);
    }

    result.converged = false;
    for (int iter = 1; iter <= max_iter; ++iter) {
        Vector col_means(p);
        for (Eigen::Index j = 0; j < p; ++j) col_means(j) = result.completed.col(j).mean();
        Matrix centered = result.completed.rowwise() - col_means.transpose();

        Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& sv = svd.singularValues();

        // Noise level: mean of the trailing (beyond-S) eigenvalues.
        double sigma2 = 0.0;
        const Eigen::Index total = sv.size();
        if (total > n_components) {
            for (Eigen::Index s = n_components; s < total; ++s) {
                sigma2 += sv(s) * sv(s) / static_cast<double>(n - 1);
            }
            sigma2 /= static_cast<double>(total - n_components);
        }

        Vector shrunk = Vector::Zero(n_components);
        for (int s = 0; s < n_components; ++s) {
            shrunk(s) = sv(s) > 0.0 ? std::max(sv(s) - sigma2 / sv(s), 0.0) : 0.0;
        }
        const Matrix reconstruction =
            svd.matrixU().leftCols(n_components) * shrunk.asDiagonal() *
            svd.matrixV().leftCols(n_components).transpose();

        double change = 0.0;
        for (const auto& [i, j] : missing) {
            const double updated = reconstruction(i, j) + col_means(j);
            const double diff = updated - result.completed(i, j);
            change += diff * diff;
            result.completed(i, j) = updated;
        }
        result.n_iterations = iter;
        result.final_change = change;
        if (change < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

std::vector<ComponentCorrelations> loading_correlations(const PcaModel& model,
                                                        const Matrix& matrix) {
    const Matrix scores = project(model, matrix);
    const Eigen::Index n = matrix.rows();
    const Eigen::Index p = matrix.cols();

    auto pearson = [n](const Vector& a, const Vector& b) {
        const double ma = a.mean(), mb = b.mean();
        double num = 0.0, da = 0.0, db = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            num += (a(i) - ma) * (b(i) - mb);
            da += (a(i) - ma) * (a(i) - ma);
            db += (b(i) - mb) * (b(i) - mb);
        }
        const double denom = std::sqrt(da * db);
        return denom > 0.0 ? num / denom : 0.0;
    };

    std::vector<ComponentCorrelations> out;
    for (Eigen::Index s = 0; s < scores.cols(); ++s) {
        ComponentCorrelations cc;
        cc.component = static_cast<int>(s) + 1;
        for (Eigen::Index j = 0; j < p; ++j) {
            cc.all.push_back(pearson(matrix.col(j), scores.col(s)));
        }
        // Ties break by column order via stable sort.
        std::vector<std::size_t> desc(static_cast<std::size_t>(p));
        for (std::size_t j = 0; j < desc.size(); ++j) desc[j] = j;
        std::vector<std::size_t> asc = desc;
        std::stable_sort(desc.begin(), desc.end(), [&](std::size_t a, std::size_t b) {
            return cc.all[a] > cc.all[b];
        });
        std::stable_sort(asc.begin(), asc.end(), [&](std::size_t a, std::size_t b) {
            return cc.all[a] < cc.all[b];
        });
        for (std::size_t r = 0; r < desc.size() && cc.top_positive.size() < 3; ++r) {
            if (cc.all[desc[r]] > 0.0) {
                cc.top_positive.emplace_back(model.column_names[desc[r]], cc.all[desc[r]]);
            }
        }
        for (std::size_t r = 0; r < asc.size() && cc.top_negative.size() < 3; ++r) {
            if (cc.all[asc[r]] < 0.0) {
                cc.top_negative.emplace_back(model.column_names[asc[r]], cc.all[asc[r]]);
            }
        }
        out.push_back(std::move(cc));
    }
    return out;
}

}  // namespace firmprod
