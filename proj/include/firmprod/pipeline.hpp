#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "firmprod/cluster.hpp"
#include "firmprod/panel.hpp"
#include "firmprod/prodest.hpp"
#include "firmprod/som.hpp"

namespace firmprod {

struct PeriodInput {
    std::string label;
    std::string path;
    int first_period = std::numeric_limits<int>::min();
    int last_period = std::numeric_limits<int>::max();
};

struct PipelineConfig {
    std::vector<PeriodInput> periods;  // one or two
    PanelSchema schema;

    bool per_worker = true;
    // Averaging the raw window precedes the per-worker division by default.
    bool average_before_per_worker = true;
    double screen_threshold = 0.85;

    Method method = Method::ACF;
    GmmSettings gmm;
    bool first_difference = false;

    int n_components = 8;
    double impute_tol = 1e-6;
    int impute_max_iter = 1000;

    SomConfig som;  // rows/cols 0 = data-driven grid

    int k = 0;  // 0 = gap-statistic selection
    int kmax = 8;
    int gap_b = 50;

    bool controls = true;
    int lasso_folds = 10;

    std::string output_dir = "out";
    std::uint64_t seed = 1;
};

PipelineConfig pipeline_config_from_json(const std::string& json_text);
// File paths in `periods` are resolved relative to the config file.
PipelineConfig load_pipeline_config(const std::string& path);

struct ArtifactEntry {
    std::string file;  // relative to the output directory
    std::string stage;
    std::string checksum;
};

struct Manifest {
    std::string checksum_algorithm = "fnv1a64";
    std::uint64_t seed = 0;
    std::vector<ArtifactEntry> artifacts;
};

Manifest run_pipeline(const PipelineConfig& config);

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

// Markdown summary assembled from the artifact files; throws
// IncompleteManifest when a required stage artifact is absent.
std::string render_report(const Manifest& manifest, const std::string& output_dir);

// Table A.5-style layout: one column per method, rows beta_l / beta_k / beta_m.
std::string render_coefficient_table(
    const std::vector<std::pair<std::string, ProductionCoefficients>>& columns);

std::uint64_t file_checksum(const std::string& path);

}  // namespace firmprod
