#include "firmprod/regress.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "firmprod/linreg.hpp"
#include "firmprod/panel.hpp"
#include "firmprod/rng.hpp"
#include "firmprod/stats.hpp"

namespace firmprod {

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    if (p < 0.1) return ".";
    return "";
}

namespace {

struct DummyBlock {
    Matrix columns;
    std::vector<std::string> names;
};

DummyBlock dummy_encode(const std::vector<CategoricalControl>& controls, std::size_t n) {
    DummyBlock block;
    std::vector<Vector> cols;
    for (const auto& control : controls) {
        if (control.values.size() != n) {
            throw LengthMismatch("control " + control.name + " has wrong length");
        }
        std::set<std::string> levels(control.values.begin(), control.values.end());
        bool first = true;  // first level alphabetically is the reference
        for (const auto& level : levels) {
            if (first) {
                first = false;
                continue;
            }
            Vector col(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                col(static_cast<Eigen::Index>(i)) = control.values[i] == level ? 1.0 : 0.0;
            }
            cols.push_back(std::move(col));
            block.names.push_back(control.name + "=" + level);
        }
    }
    block.columns = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        block.columns.col(static_cast<Eigen::Index>(j)) = cols[j];
    }
    return block;
}

}  // namespace

RegressionReport pcr(const Vector& tfp_growth, const Matrix& scores,
                     const std::vector<std::string>& score_names,
                     const std::vector<CategoricalControl>& controls) {
    const Eigen::Index n = tfp_growth.size();
    if (scores.rows() != n) throw LengthMismatch("pcr: tfp_growth and scores must align");

    std::vector<std::string> names = score_names;
    if (names.empty()) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            names.push_back("PC" + std::to_string(j + 1));
        }
    }
    const DummyBlock dummies = dummy_encode(controls, static_cast<std::size_t>(n));

    const Eigen::Index p = 1 + scores.cols() + dummies.columns.cols();
    if (n <= p) throw TooFewRows("pcr: need more rows than regressors");
    Matrix X(n, p);
    X.col(0).setOnes();
    X.middleCols(1, scores.cols()) = scores;
    if (dummies.columns.cols() > 0) X.rightCols(dummies.columns.cols()) = dummies.columns;

    const OlsFit fit = ols(X, tfp_growth);

    RegressionReport report;
    report.terms.push_back("(Intercept)");
    for (const auto& nm : names) report.terms.push_back(nm);
    for (const auto& nm : dummies.names) report.terms.push_back(nm);
    report.n = static_cast<std::size_t>(n);
    report.r_squared = fit.r_squared;
    report.controls_included = !controls.empty();
    const double dof = static_cast<double>(n - p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double coef = fit.coefficients(j);
        const double se = fit.standard_errors(j);
        const double t = se > 0.0 ? coef / se : 0.0;
        report.coefficients.push_back(coef);
        report.standard_errors.push_back(se);
        report.t_stats.push_back(t);
        report.p_values.push_back(stats::t_two_sided_p(t, dof));
    }
    return report;
}

PcrByCluster pcr_by_cluster(const Vector& tfp_growth, const Matrix& scores,
                            const std::vector<int>& labels,
                            const std::vector<std::string>& score_names,
                            const std::vector<CategoricalControl>& controls) {
    if (static_cast<Eigen::Index>(labels.size()) != tfp_growth.size()) {
        throw LengthMismatch("pcr_by_cluster: labels and tfp_growth must align");
    }
    std::set<int> ids(labels.begin(), labels.end());

    PcrByCluster out;
    for (const int cluster : ids) {
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cluster) rows.push_back(static_cast<Eigen::Index>(i));
        }
        Vector sub_y(static_cast<Eigen::Index>(rows.size()));
        Matrix sub_scores(static_cast<Eigen::Index>(rows.size()), scores.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            sub_y(static_cast<Eigen::Index>(r)) = tfp_growth(rows[r]);
            sub_scores.row(static_cast<Eigen::Index>(r)) = scores.row(rows[r]);
        }
        std::vector<CategoricalControl> sub_controls;
        for (const auto& control : controls) {
            CategoricalControl sc;
            sc.name = control.name;
            for (const auto r : rows) sc.values.push_back(control.values[static_cast<std::size_t>(r)]);
            sub_controls.push_back(std::move(sc));
        }

        const DummyBlock dummies = dummy_encode(sub_controls, rows.size());
        const std::size_t p =
            1 + static_cast<std::size_t>(scores.cols()) +
            static_cast<std::size_t>(dummies.columns.cols());
        if (rows.size() < p + 5) {
            out.skipped.push_back({cluster, rows.size(),
                                   "InsufficientSample: n=" + std::to_string(rows.size()) +
                                       " < p+5=" + std::to_string(p + 5)});
            continue;
        }
        try {
            RegressionReport report = pcr(sub_y, sub_scores, score_names, sub_controls);
            report.subsample = cluster;
            out.reports.push_back(std::move(report));
        } catch (const Error& e) {
            out.skipped.push_back({cluster, rows.size(), e.what()});
        }
    }
    return out;
}

Vector lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda,
                                double coef_tol, int max_sweeps) {
    if (lambda < 0.0) throw Error("lasso: lambda must be >= 0");
    if (X.rows() != y.size()) throw LengthMismatch("lasso: X and y must align");
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const double dn = static_cast<double>(n);

    Vector x_sq(p);
    for (Eigen::Index j = 0; j < p; ++j) x_sq(j) = X.col(j).squaredNorm() / dn;

    Vector beta = Vector::Zero(p);
    Vector residual = y;
    auto soft = [](double z, double g) {
        if (z > g) return z - g;
        if (z < -g) return z + g;
        return 0.0;
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (x_sq(j) <= 0.0) continue;
            const double rho = X.col(j).dot(residual) / dn + x_sq(j) * beta(j);
            const double updated = soft(rho, lambda) / x_sq(j);
            const double change = updated - beta(j);
            if (change != 0.0) {
                residual -= change * X.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::fabs(change));
            }
        }
        if (max_change < coef_tol) return beta;
    }
    throw DidNotConverge("lasso_coordinate_descent: max sweeps exhausted");
}

double lasso_lambda_max(const Matrix& X, const Vector& y) {
    // Same per-column dot product as the descent update, so beta = 0 holds
    // exactly at this threshold.
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        lmax = std::max(lmax, std::fabs(X.col(j).dot(y) / static_cast<double>(X.rows())));
    }
    return lmax;
}

LassoResult lasso_cv(const Matrix& X, const Vector& y,
                     const std::vector<std::string>& term_names,
                     std::vector<double> lambda_grid, int folds, std::uint64_t seed,
                     LassoRule rule) {
    if (folds < 2) throw Error("lasso_cv: folds must be >= 2");
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (term_names.size() != static_cast<std::size_t>(p)) {
        throw LengthMismatch("lasso_cv: term_names must match X columns");
    }

    // Standardize the design and center the response once, on the full data.
    const auto [Xs_raw, params] = standardize(X);
    Matrix Xs = Xs_raw;
    const double y_mean = y.mean();
    Vector yc = y.array() - y_mean;

    if (lambda_grid.empty()) {
        const double lmax = lasso_lambda_max(Xs, yc);
        const double lmin = 1e-3 * lmax;
        for (int i = 0; i < 100; ++i) {
            const double t = static_cast<double>(i) / 99.0;
            lambda_grid.push_back(lmax * std::pow(lmin / lmax, t));
        }
    }
    std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<>());

    // Seeded fold assignment by shuffled striping.
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
        Rng rng = Rng::stream(seed, "cv");
        rng.shuffle(order);
        for (std::size_t i = 0; i < order.size(); ++i) {
            fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % folds);
        }
    }

    LassoResult result;
    result.selected_rule = rule;
    result.cv_lambdas = lambda_grid;
    result.cv_mean_mse.assign(lambda_grid.size(), 0.0);
    result.cv_se_mse.assign(lambda_grid.size(), 0.0);

    std::vector<std::vector<double>> fold_mse(lambda_grid.size(),
                                              std::vector<double>(folds, 0.0));
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
        }
        Matrix Xtr(static_cast<Eigen::Index>(train.size()), p);
        Vector ytr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = Xs.row(train[i]);
            ytr(static_cast<Eigen::Index>(i)) = yc(train[i]);
        }
        // Warm starts along the descending grid.
        for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
            const Vector beta = lasso_coordinate_descent(Xtr, ytr, lambda_grid[g]);
            double mse = 0.0;
            for (const auto i : test) {
                const double err = yc(i) - Xs.row(i).dot(beta);
                mse += err * err;
            }
            fold_mse[g][static_cast<std::size_t>(fold)] = mse / static_cast<double>(test.size());
        }
    }
    for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
        result.cv_mean_mse[g] = stats::mean(fold_mse[g]);
        const auto sd = stats::sample_sd(fold_mse[g]);
        result.cv_se_mse[g] = sd ? *sd / std::sqrt(static_cast<double>(folds)) : 0.0;
    }

    std::size_t best_g = 0;
    for (std::size_t g = 1; g < lambda_grid.size(); ++g) {
        if (result.cv_mean_mse[g] < result.cv_mean_mse[best_g]) best_g = g;
    }
    std::size_t chosen = best_g;
    if (rule == LassoRule::OneSd) {
        const double limit = result.cv_mean_mse[best_g] + result.cv_se_mse[best_g];
        for (std::size_t g = 0; g <= best_g; ++g) {  // grid descends, so first hit = largest lambda
            if (result.cv_mean_mse[g] <= limit) {
                chosen = g;
                break;
            }
        }
    }
    result.lambda = lambda_grid[chosen];

    const Vector beta_std = lasso_coordinate_descent(Xs, yc, result.lambda);
    result.coefficients.assign(static_cast<std::size_t>(p), 0.0);
    double intercept = y_mean;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double original = beta_std(j) / params.sds[static_cast<std::size_t>(j)];
        result.coefficients[static_cast<std::size_t>(j)] = original;
        intercept -= original * params.means[static_cast<std::size_t>(j)];
        if (beta_std(j) != 0.0) {
            result.nonzero_terms.push_back(term_names[static_cast<std::size_t>(j)]);
        }
    }
    result.intercept = intercept;
    return result;
}

}  // namespace firmprod
