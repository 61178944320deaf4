#include "firmprod/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "firmprod/csv.hpp"
#include "firmprod/pca.hpp"
#include "firmprod/regress.hpp"
#include "firmprod/rng.hpp"
#include "firmprod/svg.hpp"

namespace firmprod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v, int decimals) {
    if (is_missing(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string pct1(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * fraction);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::uint64_t file_checksum(const std::string& path) {
    return fnv1a64(read_text(path));
}

PipelineConfig pipeline_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("pipeline config: ") + e.what());
    }
    PipelineConfig c;
    if (!j.contains("periods") || !j.at("periods").is_array() || j.at("periods").empty()) {
        throw InvalidConfig("pipeline config: 'periods' must be a non-empty array");
    }
    for (const auto& jp : j.at("periods")) {
        PeriodInput p;
        p.label = jp.value("label", "period" + std::to_string(c.periods.size() + 1));
        if (!jp.contains("path")) throw InvalidConfig("period entry needs 'path'");
        p.path = jp.at("path").get<std::string>();
        if (jp.contains("first_period")) p.first_period = jp.at("first_period");
        if (jp.contains("last_period")) p.last_period = jp.at("last_period");
        c.periods.push_back(std::move(p));
    }
    if (c.periods.size() > 2) throw InvalidConfig("pipeline supports at most two periods");

    if (j.contains("schema")) {
        const auto& js = j.at("schema");
        auto get = [&](const char* key, std::string& field) {
            if (js.contains(key)) field = js.at(key).get<std::string>();
        };
        get("firm", c.schema.firm);
        get("period", c.schema.period);
        get("output", c.schema.output);
        get("labor", c.schema.labor);
        get("capital", c.schema.capital);
        get("intermediates", c.schema.intermediates);
        get("investment", c.schema.investment);
        get("age", c.schema.age);
        if (js.contains("categories")) {
            c.schema.categories = js.at("categories").get<std::vector<std::string>>();
        }
    }
    if (j.contains("transform")) {
        const auto& jt = j.at("transform");
        if (jt.contains("per_worker")) c.per_worker = jt.at("per_worker");
        if (jt.contains("average_before_per_worker")) {
            c.average_before_per_worker = jt.at("average_before_per_worker");
        }
        if (jt.contains("screen_threshold")) c.screen_threshold = jt.at("screen_threshold");
    }
    if (j.contains("estimator")) {
        const auto& je = j.at("estimator");
        if (je.contains("method")) c.method = method_from_name(je.at("method"));
        if (je.contains("series_degree")) c.gmm.series_degree = je.at("series_degree");
        if (je.contains("markov_degree")) c.gmm.markov_poly_degree = je.at("markov_degree");
        if (je.contains("n_multistarts")) c.gmm.n_multistarts = je.at("n_multistarts");
        if (je.contains("survival_correction")) {
            c.gmm.survival_correction = je.at("survival_correction");
        }
        if (je.contains("first_difference")) c.first_difference = je.at("first_difference");
    }
    if (j.contains("pca")) {
        const auto& jp = j.at("pca");
        if (jp.contains("n_components")) c.n_components = jp.at("n_components");
        if (jp.contains("impute_tol")) c.impute_tol = jp.at("impute_tol");
        if (jp.contains("impute_max_iter")) c.impute_max_iter = jp.at("impute_max_iter");
    }
    if (j.contains("som")) {
        const auto& js = j.at("som");
        if (js.contains("rows")) c.som.rows = js.at("rows");
        if (js.contains("cols")) c.som.cols = js.at("cols");
        if (js.contains("epochs")) c.som.epochs = js.at("epochs");
        if (js.contains("lr_start")) c.som.lr_start = js.at("lr_start");
        if (js.contains("lr_end")) c.som.lr_end = js.at("lr_end");
        if (js.contains("radius_start")) c.som.radius_start = js.at("radius_start");
        if (js.contains("radius_end")) c.som.radius_end = js.at("radius_end");
    }
    if (j.contains("cluster")) {
        const auto& jc = j.at("cluster");
        if (jc.contains("k")) {
            if (jc.at("k").is_string()) {
                if (jc.at("k") != "auto") throw InvalidConfig("cluster.k must be 'auto' or int");
                c.k = 0;
            } else {
                c.k = jc.at("k");
            }
        }
        if (jc.contains("kmax")) c.kmax = jc.at("kmax");
        if (jc.contains("gap_b")) c.gap_b = jc.at("gap_b");
    }
    if (j.contains("regress")) {
        const auto& jr = j.at("regress");
        if (jr.contains("controls")) c.controls = jr.at("controls");
        if (jr.contains("lasso_folds")) c.lasso_folds = jr.at("lasso_folds");
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir");
    if (j.contains("seed")) c.seed = j.at("seed");
    return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig c = pipeline_config_from_json(read_text(path));
    const fs::path base = fs::path(path).parent_path();
    for (auto& p : c.periods) {
        if (!fs::path(p.path).is_absolute()) p.path = (base / p.path).string();
    }
    return c;
}

namespace {

// Firm-level cross-section fed to the unsupervised stages.
struct CrossSection {
    std::vector<std::string> firms;
    Vector tfp;                     // per-firm mean first-stage residual
    Matrix variables;               // kept accounting variables, original scale
    std::vector<std::string> variable_names;
    std::vector<CategoricalControl> controls;
};

struct PeriodState {
    std::string label;
    EstimatorResult estimate;
    CrossSection cross;
    Matrix scores;
    std::vector<std::string> score_names;
    std::vector<int> labels;
    int k = 0;
};

class ArtifactWriter {
   public:
    ArtifactWriter(fs::path dir, Manifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

    void text(const std::string& stage, const std::string& file, const std::string& contents) {
        write_text(dir_ / file, contents);
        manifest_.artifacts.push_back({file, stage, ""});
    }
    void table(const std::string& stage, const std::string& file, const csv::Table& t) {
        text(stage, file, csv::to_string(t));
    }
    void json_file(const std::string& stage, const std::string& file, const json& j) {
        text(stage, file, j.dump(2) + "\n");
    }

   private:
    fs::path dir_;
    Manifest& manifest_;
};

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json scree_json(const PcaModel& pca) {
    json arr = json::array();
    for (std::size_t s = 0; s < pca.eigenvalues.size(); ++s) {
        arr.push_back({{"component", s + 1},
                       {"eigenvalue", pca.eigenvalues[s]},
                       {"fraction", pca.variance_fractions[s]}});
    }
    return arr;
}

csv::Table pcr_table(const RegressionReport& report) {
    csv::Table t;
    t.header = {"term", "estimate", "std_error", "t_stat", "p_value", "stars"};
    for (std::size_t i = 0; i < report.terms.size(); ++i) {
        t.rows.push_back({report.terms[i], fmt(report.coefficients[i], 4),
                          fmt(report.standard_errors[i], 4), fmt(report.t_stats[i], 4),
                          fmt(report.p_values[i], 4), significance_stars(report.p_values[i])});
    }
    return t;
}

}  // namespace

namespace {

PeriodState run_period(const PipelineConfig& config, const PeriodInput& input,
                       std::size_t period_index, ArtifactWriter& out) {
    PeriodState state;
    state.label = input.label;
    const std::string stage_prefix = input.label + ".";
    auto stage_guard = [&](const std::string& stage, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw Error("stage " + stage_prefix + stage + ": " + e.what());
        }
    };

    FirmPanel window;
    stage_guard("ingest", [&] {
        const FirmPanel full = load_panel(input.path, config.schema);
        FirmPanel filtered;
        filtered.variable_catalog = full.variable_catalog;
        filtered.category_names = full.category_names;
        for (const auto& obs : full.observations) {
            if (obs.period >= input.first_period && obs.period <= input.last_period) {
                filtered.observations.push_back(obs);
            }
        }
        if (filtered.observations.empty()) {
            throw EmptyPanel("no observations in the period window");
        }
        window = std::move(filtered);

        std::vector<std::string> stat_vars;
        for (const char* core : {"output", "labor", "capital", "intermediates", "investment"}) {
            stat_vars.push_back(core);
        }
        const auto stats_rows = descriptive_stats(window, stat_vars);
        csv::Table st;
        st.header = {"Variable", "N", "Mean", "Pctl. 85", "Max", "Std. Dev."};
        json stats_json = json::array();
        for (const auto& row : stats_rows) {
            st.rows.push_back({row.name, std::to_string(row.n), csv::format_double(row.mean),
                               csv::format_double(row.pctl85), csv::format_double(row.max),
                               csv::format_double(row.sd)});
            json jr;
            jr["variable"] = row.name;
            jr["n"] = row.n;
            jr["mean"] = row.mean;
            jr["pctl85"] = row.pctl85;
            jr["max"] = row.max;
            if (!is_missing(row.sd)) jr["sd"] = row.sd;
            stats_json.push_back(jr);
        }
        out.table("ingest", input.label + "_descriptive.csv", st);
        out.json_file("ingest", input.label + "_descriptive.json", stats_json);
    });

    stage_guard("estimate", [&] {
        state.estimate = estimate(window, config.method, config.gmm);
        json coef;
        coef["method"] = method_name(config.method);
        coef["beta_0"] = state.estimate.coefficients.beta_0;
        coef["beta_l"] = state.estimate.coefficients.beta_l;
        coef["beta_k"] = state.estimate.coefficients.beta_k;
        if (state.estimate.coefficients.beta_m) coef["beta_m"] = *state.estimate.coefficients.beta_m;
        if (state.estimate.coefficients.beta_a) coef["beta_a"] = *state.estimate.coefficients.beta_a;
        coef["first_stage_r_squared"] = state.estimate.first_stage.r_squared;
        coef["gmm_objective"] = state.estimate.diagnostics.gmm_objective;
        coef["sample_size"] = state.estimate.diagnostics.sample_size;
        coef["dropped_rows"] = state.estimate.diagnostics.dropped_rows;
        out.json_file("estimate", input.label + "_coefficients.json", coef);

        csv::Table tfp;
        tfp.header = {"firm", "period", "tfp_growth"};
        const auto& keys = state.estimate.keys;
        Vector values = state.estimate.tfp_growth;
        std::vector<ObsKey> out_keys = keys;
        if (config.first_difference) {
            auto [dk, dv] = first_difference(keys, values);
            out_keys = std::move(dk);
            values = std::move(dv);
        }
        for (std::size_t i = 0; i < out_keys.size(); ++i) {
            tfp.rows.push_back({out_keys[i].firm_id, std::to_string(out_keys[i].period),
                                csv::format_double(values(static_cast<Eigen::Index>(i)))});
        }
        out.table("estimate", input.label + "_tfp.csv", tfp);
    });

    ScreeningReport screening;
    stage_guard("transform", [&] {
        FirmPanel cross;
        const auto catalog_names = [&] {
            std::vector<std::string> names;
            for (const auto& v : window.variable_catalog) names.push_back(v.name);
            return names;
        }();
        if (config.per_worker && !config.average_before_per_worker) {
            cross = average_periods(per_worker_transform(window, catalog_names),
                                    input.first_period, input.last_period);
        } else {
            cross = average_periods(window, input.first_period, input.last_period);
            if (config.per_worker) cross = per_worker_transform(cross, catalog_names);
        }

        screening = screen_missing(cross, config.screen_threshold);
        json js;
        js["threshold"] = screening.threshold;
        js["kept"] = screening.kept;
        json dropped = json::array();
        for (const auto& [name, fraction] : screening.dropped) {
            dropped.push_back({{"variable", name}, {"observed_fraction", fraction}});
        }
        js["dropped"] = dropped;
        out.json_file("transform", input.label + "_screening.json", js);
        if (screening.kept.empty()) throw EmptyPanel("screening kept no variables");

        // Per-firm TFP joins the collapsed cross-section; firms missing from
        // either side drop out.
        std::map<std::string, std::pair<double, int>> firm_tfp;
        for (std::size_t i = 0; i < state.estimate.keys.size(); ++i) {
            auto& acc = firm_tfp[state.estimate.keys[i].firm_id];
            acc.first += state.estimate.tfp_growth(static_cast<Eigen::Index>(i));
            acc.second += 1;
        }
        std::vector<double> tfp_values;
        std::vector<const FirmObservation*> rows;
        for (const auto& obs : cross.observations) {
            const auto it = firm_tfp.find(obs.firm_id);
            if (it == firm_tfp.end()) continue;
            rows.push_back(&obs);
            tfp_values.push_back(it->second.first / it->second.second);
        }
        if (rows.size() < 10) throw TooFewRows("cross-section has fewer than 10 firms");

        state.cross.variable_names = screening.kept;
        state.cross.tfp = to_vector(tfp_values);
        state.cross.variables = Matrix(static_cast<Eigen::Index>(rows.size()),
                                       static_cast<Eigen::Index>(screening.kept.size()));
        state.cross.variables.setConstant(kMissing);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            state.cross.firms.push_back(rows[i]->firm_id);
            for (std::size_t j = 0; j < screening.kept.size(); ++j) {
                if (const auto v = observation_value(*rows[i], screening.kept[j])) {
                    state.cross.variables(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(j)) = *v;
                }
            }
        }
        for (const auto& cat : cross.category_names) {
            CategoricalControl control;
            control.name = cat;
            for (const auto* obs : rows) {
                const auto it = obs->categories.find(cat);
                control.values.push_back(it == obs->categories.end() ? "" : it->second);
            }
            state.cross.controls.push_back(std::move(control));
        }
    });

    Matrix completed_std;
    StandardizationParams std_params;
    stage_guard("impute", [&] {
        auto [z, params] = standardize(state.cross.variables, state.cross.variable_names);
        std_params = params;
        const int p = static_cast<int>(z.cols());
        const int rank = std::max(1, std::min(config.n_components, p - 1));
        const ImputationResult imputed =
            iterative_impute(z, rank, config.impute_tol, config.impute_max_iter);
        completed_std = imputed.completed;

        csv::Table t;
        t.header = {"firm"};
        for (const auto& nm : state.cross.variable_names) t.header.push_back(nm);
        const Matrix original_scale = unstandardize(completed_std, std_params);
        for (std::size_t i = 0; i < state.cross.firms.size(); ++i) {
            std::vector<std::string> row{state.cross.firms[i]};
            for (Eigen::Index j = 0; j < original_scale.cols(); ++j) {
                row.push_back(csv::format_double(original_scale(static_cast<Eigen::Index>(i), j)));
            }
            t.rows.push_back(std::move(row));
        }
        out.table("impute", input.label + "_imputed.csv", t);
        json js;
        js["iterations"] = imputed.n_iterations;
        js["final_change"] = imputed.final_change;
        js["rank"] = imputed.rank;
        js["converged"] = imputed.converged;
        out.json_file("impute", input.label + "_imputation.json", js);
    });

    PcaModel pca;
    stage_guard("pca", [&] {
        const auto n = completed_std.rows();
        const auto p = completed_std.cols();
        const int S = std::max(
            1, std::min<int>(config.n_components, static_cast<int>(std::min(n - 1, p))));
        pca = fit_pca(completed_std, S, state.cross.variable_names);
        pca.standardization = std_params;
        state.scores = project(pca, completed_std);
        for (int s = 1; s <= S; ++s) state.score_names.push_back("PC" + std::to_string(s));

        csv::Table loadings;
        loadings.header = {"variable"};
        for (const auto& nm : state.score_names) loadings.header.push_back(nm);
        for (Eigen::Index j = 0; j < pca.loadings.rows(); ++j) {
            std::vector<std::string> row{state.cross.variable_names[static_cast<std::size_t>(j)]};
            for (Eigen::Index s = 0; s < pca.loadings.cols(); ++s) {
                row.push_back(csv::format_double(pca.loadings(j, s)));
            }
            loadings.rows.push_back(std::move(row));
        }
        out.table("pca", input.label + "_loadings.csv", loadings);
        out.json_file("pca", input.label + "_scree.json", scree_json(pca));

        const auto correlations = loading_correlations(pca, completed_std);
        csv::Table corr;
        corr.header = {"component", "var_explained", "top_positive", "top_negative"};
        for (const auto& cc : correlations) {
            auto join = [](const std::vector<std::pair<std::string, double>>& items) {
                std::string s;
                for (const auto& [name, value] : items) {
                    if (!s.empty()) s += ' ';
                    s += name;
                }
                return s;
            };
            corr.rows.push_back({"PC " + std::to_string(cc.component),
                                 pct1(pca.variance_fractions[static_cast<std::size_t>(
                                     cc.component - 1)]),
                                 join(cc.top_positive), join(cc.top_negative)});
        }
        out.table("pca", input.label + "_correlations.csv", corr);

        csv::Table scores;
        scores.header = {"firm"};
        for (const auto& nm : state.score_names) scores.header.push_back(nm);
        for (std::size_t i = 0; i < state.cross.firms.size(); ++i) {
            std::vector<std::string> row{state.cross.firms[i]};
            for (Eigen::Index s = 0; s < state.scores.cols(); ++s) {
                row.push_back(csv::format_double(state.scores(static_cast<Eigen::Index>(i), s)));
            }
            scores.rows.push_back(std::move(row));
        }
        out.table("pca", input.label + "_scores.csv", scores);
    });

    SomModel som;
    stage_guard("som", [&] {
        Matrix features(state.scores.rows(), state.scores.cols() + 1);
        features.leftCols(state.scores.cols()) = state.scores;
        features.col(state.scores.cols()) = state.cross.tfp;
        auto [z, params] = standardize(features);
        (void)params;

        SomConfig som_config = config.som;
        som_config.seed = Rng::stream_seed(config.seed, "som", period_index);
        som = train_som(z, som_config);

        csv::Table codebook;
        codebook.header = {"node", "row", "col"};
        for (const auto& nm : state.score_names) codebook.header.push_back(nm);
        codebook.header.push_back("tfp_growth");
        for (Eigen::Index node = 0; node < som.codebook.rows(); ++node) {
            std::vector<std::string> row{std::to_string(node),
                                         std::to_string(node / som.config.cols),
                                         std::to_string(node % som.config.cols)};
            for (Eigen::Index j = 0; j < som.codebook.cols(); ++j) {
                row.push_back(csv::format_double(som.codebook(node, j)));
            }
            codebook.rows.push_back(std::move(row));
        }
        out.table("som", input.label + "_som_codebook.csv", codebook);

        csv::Table assignments;
        assignments.header = {"firm", "node"};
        for (std::size_t i = 0; i < state.cross.firms.size(); ++i) {
            assignments.rows.push_back(
                {state.cross.firms[i], std::to_string(som.assignments[i])});
        }
        out.table("som", input.label + "_som_assignments.csv", assignments);

        const Matrix um = u_matrix(som);
        csv::Table um_table;
        for (int c = 0; c < som.config.cols; ++c) um_table.header.push_back("c" + std::to_string(c));
        for (int r = 0; r < som.config.rows; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < som.config.cols; ++c) row.push_back(csv::format_double(um(r, c)));
            um_table.rows.push_back(std::move(row));
        }
        out.table("som", input.label + "_umatrix.csv", um_table);
        out.text("som", input.label + "_umatrix.svg",
                 svg::heatmap(um, input.label + " U-matrix"));

        const ComponentPlanes planes = component_planes(som);
        csv::Table plane_table;
        plane_table.header = {"plane", "row", "col", "value"};
        std::vector<std::string> plane_names = state.score_names;
        plane_names.push_back("tfp_growth");
        for (std::size_t pidx = 0; pidx < planes.planes.size(); ++pidx) {
            for (int r = 0; r < som.config.rows; ++r) {
                for (int c = 0; c < som.config.cols; ++c) {
                    plane_table.rows.push_back(
                        {plane_names[pidx], std::to_string(r), std::to_string(c),
                         csv::format_double(planes.planes[pidx](r, c))});
                }
            }
        }
        out.table("som", input.label + "_som_planes.csv", plane_table);

        csv::Table counts;
        for (int c = 0; c < som.config.cols; ++c) counts.header.push_back("c" + std::to_string(c));
        for (int r = 0; r < som.config.rows; ++r) {
            std::vector<std::string> row;
            for (int c = 0; c < som.config.cols; ++c) {
                row.push_back(std::to_string(planes.counts(r, c)));
            }
            counts.rows.push_back(std::move(row));
        }
        out.table("som", input.label + "_som_counts.csv", counts);
        out.text("som", input.label + "_som_counts.svg",
                 svg::heatmap(planes.counts.cast<double>(), input.label + " node counts"));
    });

    stage_guard("cluster", [&] {
        const std::uint64_t kseed = Rng::stream_seed(config.seed, "kmeans", period_index);
        const std::uint64_t gseed = Rng::stream_seed(config.seed, "gap", period_index);
        const int kmax = std::min<int>(config.kmax, static_cast<int>(som.codebook.rows()));
        GapCurve gap;
        if (kmax >= 2) {
            gap = gap_statistic(som.codebook, kmax, config.gap_b, gseed);
        }
        state.k = config.k > 0 ? config.k : std::max(1, gap.selected_gap);
        state.labels = cluster_via_som(som, state.k, kseed);

        json js;
        js["ks"] = gap.ks;
        js["wss"] = gap.wss_k;
        js["gap"] = gap.gap_k;
        js["sd"] = gap.sd_k;
        js["B"] = gap.B;
        js["selected_gap"] = gap.selected_gap;
        js["selected_max_gap"] = gap.selected_max_gap;
        js["selected_elbow"] = gap.selected_elbow;
        js["k_used"] = state.k;
        js["k_source"] = config.k > 0 ? "fixed" : "gap";
        out.json_file("cluster", input.label + "_gap.json", js);

        csv::Table labels;
        labels.header = {"firm", "cluster"};
        for (std::size_t i = 0; i < state.cross.firms.size(); ++i) {
            labels.rows.push_back({state.cross.firms[i], std::to_string(state.labels[i])});
        }
        out.table("cluster", input.label + "_labels.csv", labels);

        const ClusterProfile profile =
            cluster_profiles(state.labels, state.cross.tfp, state.scores, state.score_names);
        csv::Table prof;
        prof.header = {"row"};
        for (const int id : profile.cluster_ids) prof.header.push_back("G" + std::to_string(id + 1));
        std::vector<std::string> n_row{"N"};
        for (const auto count : profile.counts) n_row.push_back(std::to_string(count));
        prof.rows.push_back(n_row);
        std::vector<std::string> tfp_row{method_name(config.method) + "_res"};
        for (const double v : profile.mean_tfp) tfp_row.push_back(fmt(v, 5));
        prof.rows.push_back(tfp_row);
        for (Eigen::Index s = 0; s < profile.mean_scores.cols(); ++s) {
            std::vector<std::string> row{profile.score_names[static_cast<std::size_t>(s)]};
            for (Eigen::Index c = 0; c < profile.mean_scores.rows(); ++c) {
                row.push_back(fmt(profile.mean_scores(c, s), 5));
            }
            prof.rows.push_back(row);
        }
        out.table("cluster", input.label + "_profile.csv", prof);

        const Matrix welch = welch_matrix(state.labels, state.cross.tfp);
        csv::Table wt;
        wt.header = {"group"};
        for (const int id : profile.cluster_ids) wt.header.push_back("G" + std::to_string(id + 1));
        for (Eigen::Index r = 0; r < welch.rows(); ++r) {
            std::vector<std::string> row{"G" + std::to_string(profile.cluster_ids[
                                             static_cast<std::size_t>(r)] + 1)};
            for (Eigen::Index c = 0; c < welch.cols(); ++c) {
                row.push_back(r == c ? "-" : csv::format_double(welch(r, c)));
            }
            wt.rows.push_back(row);
        }
        out.table("cluster", input.label + "_welch.csv", wt);

        for (const auto& control : state.cross.controls) {
            const auto comp = composition(state.labels, control.values);
            csv::Table ct;
            ct.header = {"cluster", "category", "share"};
            for (const auto& [cluster, shares] : comp) {
                for (const auto& [value, share] : shares) {
                    ct.rows.push_back({"G" + std::to_string(cluster + 1), value, fmt(share, 4)});
                }
            }
            out.table("cluster", input.label + "_composition_" + control.name + ".csv", ct);
        }
    });

    stage_guard("pcr", [&] {
        const RegressionReport full = pcr(state.cross.tfp, state.scores, state.score_names);
        out.table("pcr", input.label + "_pcr.csv", pcr_table(full));
        if (config.controls && !state.cross.controls.empty()) {
            try {
                const RegressionReport with_controls =
                    pcr(state.cross.tfp, state.scores, state.score_names, state.cross.controls);
                out.table("pcr", input.label + "_pcr_controls.csv", pcr_table(with_controls));
            } catch (const RankDeficient& e) {
                json js;
                js["error"] = e.what();
                out.json_file("pcr", input.label + "_pcr_controls_skipped.json", js);
            }
        }
        const PcrByCluster by_cluster =
            pcr_by_cluster(state.cross.tfp, state.scores, state.labels, state.score_names,
                           config.controls ? state.cross.controls
                                           : std::vector<CategoricalControl>{});
        csv::Table t;
        t.header = {"cluster", "term", "estimate", "p_value", "stars", "note"};
        for (const auto& report : by_cluster.reports) {
            for (std::size_t i = 0; i < report.terms.size(); ++i) {
                t.rows.push_back({"G" + std::to_string(*report.subsample + 1), report.terms[i],
                                  fmt(report.coefficients[i], 4), fmt(report.p_values[i], 4),
                                  significance_stars(report.p_values[i]), ""});
            }
        }
        for (const auto& skip : by_cluster.skipped) {
            t.rows.push_back({"G" + std::to_string(skip.cluster + 1), "", "", "", "", skip.reason});
        }
        out.table("pcr", input.label + "_pcr_by_cluster.csv", t);
    });

    stage_guard("lasso", [&] {
        const Matrix original_scale = unstandardize(completed_std, std_params);
        const LassoResult lasso =
            lasso_cv(original_scale, state.cross.tfp, state.cross.variable_names, {},
                     config.lasso_folds, Rng::stream_seed(config.seed, "cv", period_index));
        csv::Table t;
        t.header = {"term", "coefficient"};
        for (std::size_t j = 0; j < state.cross.variable_names.size(); ++j) {
            t.rows.push_back({state.cross.variable_names[j],
                              lasso.coefficients[j] == 0.0 ? "."
                                                           : fmt(lasso.coefficients[j], 4)});
        }
        out.table("lasso", input.label + "_lasso.csv", t);
        json js;
        js["lambda"] = lasso.lambda;
        js["intercept"] = lasso.intercept;
        js["rule"] = lasso.selected_rule == LassoRule::OneSd ? "one-sd" : "min";
        js["nonzero_terms"] = lasso.nonzero_terms;
        js["cv_lambdas"] = lasso.cv_lambdas;
        js["cv_mean_mse"] = lasso.cv_mean_mse;
        js["cv_se_mse"] = lasso.cv_se_mse;
        out.json_file("lasso", input.label + "_lasso_cv.json", js);
    });

    return state;
}

}  // namespace

Manifest run_pipeline(const PipelineConfig& config) {
    if (config.periods.empty()) throw InvalidConfig("pipeline: no period inputs");
    for (const auto& p : config.periods) {
        if (!fs::exists(p.path)) throw InvalidConfig("pipeline: input file not found: " + p.path);
    }
    fs::create_directories(config.output_dir);

    Manifest manifest;
    manifest.seed = config.seed;
    ArtifactWriter out(config.output_dir, manifest);

    std::vector<PeriodState> states;
    for (std::size_t i = 0; i < config.periods.size(); ++i) {
        states.push_back(run_period(config, config.periods[i], i, out));
    }

    if (states.size() == 2) {
        try {
            const TransitionMatrix tm =
                transition_matrix(states[0].cross.firms, states[0].labels,
                                  states[1].cross.firms, states[1].labels);
            csv::Table t;
            t.header = {states[0].label + "\\" + states[1].label};
            for (Eigen::Index c = 0; c < tm.counts.cols(); ++c) {
                t.header.push_back("G" + std::to_string(c + 1));
            }
            for (Eigen::Index r = 0; r < tm.counts.rows(); ++r) {
                std::vector<std::string> row{"G" + std::to_string(r + 1)};
                for (Eigen::Index c = 0; c < tm.counts.cols(); ++c) {
                    row.push_back(std::to_string(tm.counts(r, c)));
                }
                t.rows.push_back(row);
            }
            out.table("transition", "transition.csv", t);
        } catch (const Error& e) {
            throw Error(std::string("stage transition: ") + e.what());
        }
    }

    // Checksums cover every artifact written so far; the report and manifest
    // are derived files listed afterwards.
    for (auto& artifact : manifest.artifacts) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(file_checksum(
                          (fs::path(config.output_dir) / artifact.file).string())));
        artifact.checksum = buf;
    }

    const std::string report = render_report(manifest, config.output_dir);
    out.text("report", "report.md", report);
    {
        auto& entry = manifest.artifacts.back();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(file_checksum(
                          (fs::path(config.output_dir) / entry.file).string())));
        entry.checksum = buf;
    }

    write_manifest((fs::path(config.output_dir) / "manifest.json").string(), manifest);
    return manifest;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    json j;
    j["checksum_algorithm"] = manifest.checksum_algorithm;
    j["seed"] = manifest.seed;
    json arr = json::array();
    for (const auto& a : manifest.artifacts) {
        arr.push_back({{"file", a.file}, {"stage", a.stage}, {"checksum", a.checksum}});
    }
    j["artifacts"] = arr;
    write_text(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    Manifest m;
    m.checksum_algorithm = j.value("checksum_algorithm", "fnv1a64");
    m.seed = j.value("seed", 0ULL);
    for (const auto& a : j.at("artifacts")) {
        m.artifacts.push_back({a.at("file"), a.at("stage"), a.at("checksum")});
    }
    return m;
}

namespace {

std::vector<std::string> artifact_files(const Manifest& manifest, const std::string& stage,
                                        const std::string& suffix) {
    std::vector<std::string> files;
    for (const auto& a : manifest.artifacts) {
        if (a.stage == stage && a.file.size() >= suffix.size() &&
            a.file.compare(a.file.size() - suffix.size(), suffix.size(), suffix) == 0) {
            files.push_back(a.file);
        }
    }
    return files;
}

std::string label_of(const std::string& file, const std::string& suffix) {
    return file.substr(0, file.size() - suffix.size());
}

std::string markdown_table(const csv::Table& t) {
    std::string md = "|";
    for (const auto& h : t.header) md += " " + h + " |";
    md += "\n|";
    for (std::size_t i = 0; i < t.header.size(); ++i) md += " --- |";
    md += "\n";
    for (const auto& row : t.rows) {
        md += "|";
        for (const auto& cell : row) md += " " + (cell.empty() ? std::string("-") : cell) + " |";
        md += "\n";
    }
    return md;
}

}  // namespace

std::string render_coefficient_table(
    const std::vector<std::pair<std::string, ProductionCoefficients>>& columns) {
    csv::Table t;
    t.header = {""};
    for (const auto& [name, coef] : columns) t.header.push_back(name);
    auto row = [&](const std::string& label, auto getter) {
        std::vector<std::string> r{label};
        bool any = false;
        for (const auto& [name, coef] : columns) {
            const auto v = getter(coef);
            if (v) {
                r.push_back(fmt(*v, 3));
                any = true;
            } else {
                r.push_back("-");
            }
        }
        if (any) t.rows.push_back(r);
    };
    row("beta_l", [](const ProductionCoefficients& c) -> std::optional<double> {
        return is_missing(c.beta_l) ? std::nullopt : std::optional<double>(c.beta_l);
    });
    row("beta_k", [](const ProductionCoefficients& c) -> std::optional<double> {
        return is_missing(c.beta_k) ? std::nullopt : std::optional<double>(c.beta_k);
    });
    row("beta_m", [](const ProductionCoefficients& c) { return c.beta_m; });
    row("beta_a", [](const ProductionCoefficients& c) { return c.beta_a; });
    return markdown_table(t);
}

std::string render_report(const Manifest& manifest, const std::string& output_dir) {
    const fs::path dir(output_dir);
    auto require = [&](const std::string& stage, const std::string& suffix) {
        auto files = artifact_files(manifest, stage, suffix);
        if (files.empty()) {
            throw IncompleteManifest("missing stage artifact: " + stage + " (*" + suffix + ")");
        }
        return files;
    };
    auto load_table = [&](const std::string& file) { return csv::read_file((dir / file).string()); };

    std::string md = "# Firm productivity pipeline report\n\n";

    // 1. production coefficients
    {
        std::vector<std::pair<std::string, ProductionCoefficients>> cols;
        for (const auto& file : require("estimate", "_coefficients.json")) {
            const json j = json::parse(read_text(dir / file));
            ProductionCoefficients c;
            c.beta_0 = j.value("beta_0", kMissing);
            c.beta_l = j.value("beta_l", kMissing);
            c.beta_k = j.value("beta_k", kMissing);
            if (j.contains("beta_m")) c.beta_m = j.at("beta_m").get<double>();
            if (j.contains("beta_a")) c.beta_a = j.at("beta_a").get<double>();
            cols.emplace_back(label_of(file, "_coefficients.json") + " (" +
                                  j.value("method", "?") + ")",
                              c);
        }
        md += "## Production coefficient estimates\n\n";
        md += render_coefficient_table(cols);
        md += "\n";
    }

    // 2. scree
    md += "## Variance explained\n\n";
    for (const auto& file : require("pca", "_scree.json")) {
        const json j = json::parse(read_text(dir / file));
        csv::Table t;
        t.header = {"component", "eigenvalue", "variance explained"};
        for (const auto& row : j) {
            t.rows.push_back({"PC " + std::to_string(row.at("component").get<int>()),
                              fmt(row.at("eigenvalue").get<double>(), 4),
                              pct1(row.at("fraction").get<double>())});
        }
        md += "### " + label_of(file, "_scree.json") + "\n\n" + markdown_table(t) + "\n";
    }

    // 3. loading correlations
    md += "## Correlations between principal components and features\n\n";
    for (const auto& file : require("pca", "_correlations.csv")) {
        csv::Table t = load_table(file);
        t.header = {"", "Var. Explained", "Top Positive Correlated Variables",
                    "Top Negative Correlated Variables"};
        md += "### " + label_of(file, "_correlations.csv") + "\n\n" + markdown_table(t) + "\n";
    }

    // 4. cluster profiles
    md += "## Groups' characteristics according to PCs\n\n";
    for (const auto& file : require("cluster", "_profile.csv")) {
        md += "### " + label_of(file, "_profile.csv") + "\n\n" +
              markdown_table(load_table(file)) + "\n";
    }

    // 5. welch matrices
    md += "## Tests for the comparison of average TFPs\n\n";
    for (const auto& file : require("cluster", "_welch.csv")) {
        md += "### " + label_of(file, "_welch.csv") + "\n\n" + markdown_table(load_table(file)) +
              "\n";
    }

    // 6. transition
    md += "## Changes in cluster membership\n\n";
    {
        const auto files = artifact_files(manifest, "transition", "transition.csv");
        if (files.empty()) {
            md += "Requires two periods; single-period run.\n\n";
        } else {
            md += markdown_table(load_table(files.front())) + "\n";
        }
    }

    // 7. PCR full sample (+ controls when present)
    md += "## PC regression, full sample\n\n";
    for (const auto& file : require("pcr", "_pcr.csv")) {
        md += "### " + label_of(file, "_pcr.csv") + "\n\n" + markdown_table(load_table(file)) +
              "\n";
    }
    for (const auto& file : artifact_files(manifest, "pcr", "_pcr_controls.csv")) {
        md += "### " + label_of(file, "_pcr_controls.csv") + " (with controls)\n\n" +
              markdown_table(load_table(file)) + "\n";
    }

    // 8. PCR by cluster
    md += "## PC regression within clusters\n\n";
    for (const auto& file : require("pcr", "_pcr_by_cluster.csv")) {
        md += "### " + label_of(file, "_pcr_by_cluster.csv") + "\n\n" +
              markdown_table(load_table(file)) + "\n";
    }

    // 9. lasso
    md += "## Lasso regression, selected coefficients\n\n";
    {
        const auto files = require("lasso", "_lasso.csv");
        std::vector<std::string> labels;
        std::vector<csv::Table> tables;
        for (const auto& file : files) {
            labels.push_back(label_of(file, "_lasso.csv"));
            tables.push_back(load_table(file));
        }
        csv::Table merged;
        merged.header = {"Variables"};
        for (const auto& l : labels) merged.header.push_back(l);
        if (!tables.empty()) {
            for (std::size_t r = 0; r < tables.front().rows.size(); ++r) {
                std::vector<std::string> row{tables.front().rows[r][0]};
                for (const auto& t : tables) {
                    row.push_back(r < t.rows.size() ? t.rows[r][1] : ".");
                }
                merged.rows.push_back(row);
            }
        }
        md += markdown_table(merged) + "\n";
    }
    return md;
}

}  // namespace firmprod
