#include "firmprod/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "firmprod/rng.hpp"
#include "firmprod/stats.hpp"

namespace firmprod {

namespace {

double squared_distance(const Matrix& m, Eigen::Index row, const Matrix& centroids, int c) {
    return (m.row(row) - centroids.row(c)).squaredNorm();
}

Matrix kmeanspp_init(const Matrix& matrix, int k, Rng& rng) {
    const Eigen::Index n = matrix.rows();
    Matrix centroids(k, matrix.cols());
    centroids.row(0) = matrix.row(static_cast<Eigen::Index>(rng.below(n)));
    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(matrix, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double running = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                running += d2(i);
                if (running >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(n));
        }
        centroids.row(c) = matrix.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), squared_distance(matrix, i, centroids, c));
        }
    }
    return centroids;
}

KMeansModel lloyd(const Matrix& matrix, int k, Rng& rng, int max_iter) {
    const Eigen::Index n = matrix.rows();
    KMeansModel model;
    model.k = k;
    model.centroids = kmeanspp_init(matrix, k, rng);
    model.labels.assign(static_cast<std::size_t>(n), -1);

    for (int iter = 1; iter <= max_iter; ++iter) {
        bool changed = false;
        double wss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(matrix, i, model.centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double d = squared_distance(matrix, i, model.centroids, c);
                if (d < best_d) {  // strict: ties keep the lowest index
                    best_d = d;
                    best = c;
                }
            }
            wss += best_d;
            if (model.labels[static_cast<std::size_t>(i)] != best) {
                model.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        model.wss_history.push_back(wss);
        model.wss = wss;
        model.iterations = iter;
        if (!changed) break;

        Matrix sums = Matrix::Zero(k, matrix.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(model.labels[static_cast<std::size_t>(i)]) += matrix.row(i);
            counts[static_cast<std::size_t>(model.labels[static_cast<std::size_t>(i)])]++;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                model.centroids.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // Re-seed an empty cluster to the farthest point.
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d = squared_distance(
                        matrix, i, model.centroids,
                        model.labels[static_cast<std::size_t>(i)]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                model.centroids.row(c) = matrix.row(far);
            }
        }
    }
    return model;
}

}  // namespace

KMeansModel kmeans(const Matrix& matrix, int k, std::uint64_t seed, int max_iter,
                   int n_restarts) {
    const Eigen::Index n = matrix.rows();
    if (k < 1 || k > n) throw KTooLarge("kmeans: need 1 <= k <= n");
    KMeansModel best;
    for (int restart = 0; restart < std::max(1, n_restarts); ++restart) {
        Rng rng = Rng::stream(seed, "kmeans", static_cast<std::uint64_t>(restart));
        KMeansModel model = lloyd(matrix, k, rng, max_iter);
        if (restart == 0 || model.wss < best.wss) best = std::move(model);
    }
    best.seed = seed;
    return best;
}

int elbow_select(const std::vector<double>& wss_curve) {
    if (wss_curve.size() < 3) throw CurveTooShort("elbow_select: need kmax >= 3");
    int best_k = 3;
    double best_drop = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 2; i < wss_curve.size(); ++i) {  // k = i+1 >= 3
        const double drop = wss_curve[i - 1] - wss_curve[i];
        if (drop > best_drop) {
            best_drop = drop;
            best_k = static_cast<int>(i) + 1;
        }
    }
    return best_k;
}

GapCurve gap_statistic(const Matrix& matrix, int kmax, int B, std::uint64_t seed) {
    if (B < 1) throw Error("gap_statistic: B must be >= 1");
    if (kmax < 2) throw Error("gap_statistic: kmax must be >= 2");
    const Eigen::Index n = matrix.rows();
    const Eigen::Index d = matrix.cols();

    Vector lo(d), hi(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        lo(j) = matrix.col(j).minCoeff();
        hi(j) = matrix.col(j).maxCoeff();
    }

    GapCurve curve;
    curve.B = B;
    std::vector<std::vector<double>> log_wss_ref(static_cast<std::size_t>(kmax));

    for (int b = 0; b < B; ++b) {
        Rng rng = Rng::stream(seed, "gap.reference", static_cast<std::uint64_t>(b));
        Matrix ref(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) ref(i, j) = rng.uniform(lo(j), hi(j));
        }
        for (int k = 1; k <= kmax; ++k) {
            const KMeansModel m = kmeans(ref, k, Rng::stream_seed(seed, "gap.ref.km", b * 97 + k));
            log_wss_ref[static_cast<std::size_t>(k - 1)].push_back(
                std::log(std::max(m.wss, 1e-300)));
        }
    }

    for (int k = 1; k <= kmax; ++k) {
        const KMeansModel m = kmeans(matrix, k, Rng::stream_seed(seed, "gap.data.km", k));
        curve.ks.push_back(k);
        curve.wss_k.push_back(m.wss);
        const auto& refs = log_wss_ref[static_cast<std::size_t>(k - 1)];
        const double ref_mean = stats::mean(refs);
        curve.gap_k.push_back(ref_mean - std::log(std::max(m.wss, 1e-300)));
        double ss = 0.0;
        for (double lw : refs) ss += (lw - ref_mean) * (lw - ref_mean);
        const double sd = std::sqrt(ss / static_cast<double>(B));
        curve.sd_k.push_back(sd * std::sqrt(1.0 + 1.0 / static_cast<double>(B)));
    }

    // One-sd rule: smallest k with gap_k >= gap_{k+1} - sd_{k+1}.
    curve.selected_gap = kmax;
    for (int k = 1; k < kmax; ++k) {
        if (curve.gap_k[static_cast<std::size_t>(k - 1)] >=
            curve.gap_k[static_cast<std::size_t>(k)] - curve.sd_k[static_cast<std::size_t>(k)]) {
            curve.selected_gap = k;
            break;
        }
    }
    curve.selected_max_gap =
        static_cast<int>(std::max_element(curve.gap_k.begin(), curve.gap_k.end()) -
                         curve.gap_k.begin()) +
        1;
    curve.selected_elbow = kmax >= 3 ? elbow_select(curve.wss_k) : 0;
    return curve;
}

std::vector<int> cluster_via_som(const SomModel& som_model, int k, std::uint64_t seed) {
    const KMeansModel nodes = kmeans(som_model.codebook, k, seed);
    std::vector<int> labels;
    labels.reserve(som_model.assignments.size());
    for (const int node : som_model.assignments) {
        labels.push_back(nodes.labels[static_cast<std::size_t>(node)]);
    }
    return labels;
}

namespace {

std::vector<int> cluster_ids(const std::vector<int>& labels) {
    std::set<int> ids(labels.begin(), labels.end());
    return {ids.begin(), ids.end()};
}

}  // namespace

ClusterProfile cluster_profiles(const std::vector<int>& labels, const Vector& tfp_growth,
                                const Matrix& scores,
                                const std::vector<std::string>& score_names) {
    if (static_cast<Eigen::Index>(labels.size()) != tfp_growth.size() ||
        static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
        throw LengthMismatch("cluster_profiles: labels, tfp_growth and scores must align");
    }
    ClusterProfile profile;
    profile.cluster_ids = cluster_ids(labels);
    profile.score_names = score_names;
    if (profile.score_names.empty()) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            profile.score_names.push_back("PC" + std::to_string(j + 1));
        }
    }
    profile.mean_scores = Matrix::Zero(static_cast<Eigen::Index>(profile.cluster_ids.size()),
                                       scores.cols());
    for (std::size_t c = 0; c < profile.cluster_ids.size(); ++c) {
        const int id = profile.cluster_ids[c];
        std::size_t count = 0;
        double tfp_sum = 0.0;
        Eigen::RowVectorXd score_sum = Eigen::RowVectorXd::Zero(scores.cols());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != id) continue;
            ++count;
            tfp_sum += tfp_growth(static_cast<Eigen::Index>(i));
            score_sum += scores.row(static_cast<Eigen::Index>(i));
        }
        profile.counts.push_back(count);
        profile.mean_tfp.push_back(tfp_sum / static_cast<double>(count));
        profile.mean_scores.row(static_cast<Eigen::Index>(c)) =
            score_sum / static_cast<double>(count);
    }
    return profile;
}

Matrix cluster_variable_means(const std::vector<int>& labels, const Matrix& values) {
    if (static_cast<Eigen::Index>(labels.size()) != values.rows()) {
        throw LengthMismatch("cluster_variable_means: labels and values must align");
    }
    const auto ids = cluster_ids(labels);
    Matrix means(static_cast<Eigen::Index>(ids.size()), values.cols());
    means.setConstant(kMissing);
    for (std::size_t c = 0; c < ids.size(); ++c) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] != ids[c]) continue;
                const double v = values(static_cast<Eigen::Index>(i), j);
                if (!is_missing(v)) {
                    sum += v;
                    ++count;
                }
            }
            if (count > 0) means(static_cast<Eigen::Index>(c), j) = sum / count;
        }
    }
    return means;
}

Matrix welch_matrix(const std::vector<int>& labels, const Vector& tfp_growth) {
    if (static_cast<Eigen::Index>(labels.size()) != tfp_growth.size()) {
        throw LengthMismatch("welch_matrix: labels and tfp_growth must align");
    }
    const auto ids = cluster_ids(labels);
    std::vector<std::vector<double>> groups(ids.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto pos = std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin();
        groups[static_cast<std::size_t>(pos)].push_back(tfp_growth(static_cast<Eigen::Index>(i)));
    }
    Matrix p(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(ids.size()));
    p.setConstant(kMissing);
    for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            if (groups[a].size() < 2 || groups[b].size() < 2) continue;
            const double pv = stats::welch_t_test(groups[a], groups[b]).p;
            p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = pv;
            p(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = pv;
        }
    }
    return p;
}

TransitionMatrix transition_matrix(const std::vector<std::string>& firms_a,
                                   const std::vector<int>& labels_a,
                                   const std::vector<std::string>& firms_b,
                                   const std::vector<int>& labels_b) {
    if (firms_a.size() != labels_a.size() || firms_b.size() != labels_b.size()) {
        throw LengthMismatch("transition_matrix: firms and labels must align");
    }
    std::map<std::string, int> map_b;
    for (std::size_t i = 0; i < firms_b.size(); ++i) map_b[firms_b[i]] = labels_b[i];

    const int rows = labels_a.empty() ? 0 : *std::max_element(labels_a.begin(), labels_a.end()) + 1;
    const int cols = labels_b.empty() ? 0 : *std::max_element(labels_b.begin(), labels_b.end()) + 1;
    TransitionMatrix out;
    out.counts = Eigen::MatrixXi::Zero(rows, cols);

    std::set<std::string> shared;
    for (std::size_t i = 0; i < firms_a.size(); ++i) {
        const auto it = map_b.find(firms_a[i]);
        if (it == map_b.end()) {
            ++out.excluded_a;
            continue;
        }
        shared.insert(firms_a[i]);
        out.counts(labels_a[i], it->second) += 1;
    }
    for (const auto& f : firms_b) {
        if (!shared.count(f)) ++out.excluded_b;
    }
    return out;
}

std::map<int, std::vector<std::pair<std::string, double>>> composition(
    const std::vector<int>& labels, const std::vector<std::string>& category) {
    if (labels.size() != category.size()) {
        throw LengthMismatch("composition: labels and category must align");
    }
    std::map<int, std::map<std::string, std::size_t>> counts;
    std::map<int, std::size_t> totals;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        counts[labels[i]][category[i]]++;
        totals[labels[i]]++;
    }
    std::map<int, std::vector<std::pair<std::string, double>>> out;
    for (const auto& [cluster, freq] : counts) {
        std::vector<std::pair<std::string, double>> shares;
        for (const auto& [value, count] : freq) {
            shares.emplace_back(value,
                                static_cast<double>(count) / static_cast<double>(totals[cluster]));
        }
        std::stable_sort(shares.begin(), shares.end(), [](const auto& a, const auto& b) {
            return a.second > b.second;  // ties keep lexicographic category order
        });
        out[cluster] = std::move(shares);
    }
    return out;
}

}  // namespace firmprod
