#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "firmprod/common.hpp"
#include "firmprod/som.hpp"

namespace firmprod {

struct KMeansModel {
    int k = 0;
    Matrix centroids;
    std::vector<int> labels;
    double wss = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> wss_history;  // after each Lloyd assignment step
};

// k-means++ seeding, Lloyd iterations, best of n_restarts by wss. Ties in
// the assignment step go to the lowest centroid index; empty clusters are
// re-seeded to the farthest point.
KMeansModel kmeans(const Matrix& matrix, int k, std::uint64_t seed, int max_iter = 100,
                   int n_restarts = 10);

// Largest WSS drop excluding the first one: argmax over k >= 3 of
// W_{k-1} - W_k, smaller k on ties. wss_curve[i] is W at k = i+1.
int elbow_select(const std::vector<double>& wss_curve);

struct GapCurve {
    std::vector<int> ks;
    std::vector<double> wss_k;
    std::vector<double> gap_k;
    std::vector<double> sd_k;  // bootstrap sd scaled by sqrt(1 + 1/B)
    int selected_gap = 1;      // one-sd rule
    int selected_max_gap = 1;  // argmax gap, reported as a diagnostic
    int selected_elbow = 0;    // 0 when kmax < 3
    int B = 0;
};

GapCurve gap_statistic(const Matrix& matrix, int kmax, int B, std::uint64_t seed);

// K-means over the SOM codebook; firms inherit their BMU node's cluster.
std::vector<int> cluster_via_som(const SomModel& som_model, int k, std::uint64_t seed);

struct ClusterProfile {
    std::vector<int> cluster_ids;
    std::vector<std::size_t> counts;
    std::vector<double> mean_tfp;
    Matrix mean_scores;  // clusters x score columns
    std::vector<std::string> score_names;
};

ClusterProfile cluster_profiles(const std::vector<int>& labels, const Vector& tfp_growth,
                                const Matrix& scores,
                                const std::vector<std::string>& score_names = {});

// Per-cluster means of the named panel variables (columns of `values`),
// used for the absolute / per-worker variable tables.
Matrix cluster_variable_means(const std::vector<int>& labels, const Matrix& values);

// Pairwise two-sided Welch tests on tfp by cluster; diagonal and clusters
// with fewer than two members give NaN.
Matrix welch_matrix(const std::vector<int>& labels, const Vector& tfp_growth);

struct TransitionMatrix {
    Eigen::MatrixXi counts;  // rows: labeling a, cols: labeling b
    int excluded_a = 0;      // firms present only in labeling a
    int excluded_b = 0;
};

TransitionMatrix transition_matrix(const std::vector<std::string>& firms_a,
                                   const std::vector<int>& labels_a,
                                   const std::vector<std::string>& firms_b,
                                   const std::vector<int>& labels_b);

// Per cluster: category shares in descending order, summing to 1.
std::map<int, std::vector<std::pair<std::string, double>>> composition(
    const std::vector<int>& labels, const std::vector<std::string>& category);

}  // namespace firmprod
