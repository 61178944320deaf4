#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "firmprod/cluster.hpp"
#include "firmprod/csv.hpp"
#include "firmprod/dgp.hpp"
#include "firmprod/panel.hpp"
#include "firmprod/pca.hpp"
#include "firmprod/pipeline.hpp"
#include "firmprod/prodest.hpp"
#include "firmprod/regress.hpp"
#include "firmprod/rng.hpp"
#include "firmprod/som.hpp"
#include "firmprod/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace firmprod;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStageFailure = 1;
constexpr int kExitConfigError = 2;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << text;
}

// FIRMPROD_OUT overrides relative output locations.
std::string resolve_out(const std::string& path) {
    const char* base = std::getenv("FIRMPROD_OUT");
    if (base == nullptr || *base == '\0' || fs::path(path).is_absolute()) return path;
    fs::create_directories(base);
    return (fs::path(base) / path).string();
}

PanelSchema schema_from_json_file(const std::string& path) {
    PanelSchema schema;
    schema.intermediates = "intermediates";
    schema.investment = "investment";
    schema.age = "age";
    schema.categories = {"country", "sector"};
    if (path.empty()) return schema;
    const json j = json::parse(read_text_file(path));
    auto get = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    schema = PanelSchema{};
    get("firm", schema.firm);
    get("period", schema.period);
    get("output", schema.output);
    get("labor", schema.labor);
    get("capital", schema.capital);
    get("intermediates", schema.intermediates);
    get("investment", schema.investment);
    get("age", schema.age);
    if (j.contains("categories")) {
        schema.categories = j.at("categories").get<std::vector<std::string>>();
    }
    return schema;
}

Matrix load_matrix_csv(const std::string& path, std::vector<std::string>& names,
                       std::vector<std::string>* row_ids) {
    const csv::Table t = csv::read_file(path);
    if (t.header.empty()) throw ParseError("empty matrix file: " + path);
    const bool has_id = !t.header.empty() && (t.header[0] == "firm" || t.header[0] == "id");
    const std::size_t offset = has_id ? 1 : 0;
    names.assign(t.header.begin() + static_cast<std::ptrdiff_t>(offset), t.header.end());
    Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(names.size()));
    m.setConstant(kMissing);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (has_id && row_ids != nullptr) row_ids->push_back(t.rows[r][0]);
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (const auto v = csv::parse_double(t.rows[r][c + offset])) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
            }
        }
    }
    return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& names,
                      const std::vector<std::string>* row_ids) {
    csv::Table t;
    if (row_ids != nullptr) t.header.push_back("firm");
    for (const auto& n : names) t.header.push_back(n);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row;
        if (row_ids != nullptr) row.push_back((*row_ids)[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(csv::format_double(m(r, c)));
        t.rows.push_back(std::move(row));
    }
    csv::write_file(path, t);
}

int run_simulate(const std::string& config_path, const std::string& panel_out,
                 const std::string& truth_out) {
    const DgpConfig config =
        config_path.empty() ? DgpConfig{} : dgp_config_from_json(read_text_file(config_path));
    const auto [panel, truth] = simulate_panel(config);

    PanelSchema schema;
    schema.intermediates = "intermediates";
    schema.investment = "investment";
    schema.age = "age";
    schema.categories = {"country", "sector"};
    save_panel(resolve_out(panel_out), panel, schema);

    csv::Table t;
    t.header = {"firm", "period", "omega", "xi", "survived"};
    for (std::size_t i = 0; i < truth.firm_ids.size(); ++i) {
        t.rows.push_back({truth.firm_ids[i], std::to_string(truth.periods[i]),
                          csv::format_double(truth.omega[i]), csv::format_double(truth.xi[i]),
                          truth.survived[i] ? "1" : "0"});
    }
    csv::write_file(resolve_out(truth_out), t);
    std::cout << "simulated " << panel.n() << " observations for " << config.n_firms
              << " firms\n";
    return kExitOk;
}

int run_estimate(const std::string& panel_path, const std::string& schema_path,
                 const std::string& method_name_str, int series_degree, int markov_degree,
                 bool first_diff, const std::string& out_path) {
    const PanelSchema schema = schema_from_json_file(schema_path);
    const FirmPanel panel = load_panel(panel_path, schema);
    GmmSettings settings;
    settings.series_degree = series_degree;
    settings.markov_poly_degree = markov_degree;
    const Method method = method_from_name(method_name_str);
    const EstimatorResult result = estimate(panel, method, settings);

    json j;
    j["method"] = method_name(method);
    j["coefficients"] = {{"beta_0", result.coefficients.beta_0},
                         {"beta_l", result.coefficients.beta_l},
                         {"beta_k", result.coefficients.beta_k}};
    if (result.coefficients.beta_m) j["coefficients"]["beta_m"] = *result.coefficients.beta_m;
    if (result.coefficients.beta_a) j["coefficients"]["beta_a"] = *result.coefficients.beta_a;
    j["diagnostics"] = {{"gmm_objective", result.diagnostics.gmm_objective},
                        {"optimizer_iterations", result.diagnostics.optimizer_iterations},
                        {"sample_size", result.diagnostics.sample_size},
                        {"dropped_rows", result.diagnostics.dropped_rows},
                        {"first_stage_r_squared", result.first_stage.r_squared}};
    const std::string out_file = resolve_out(out_path);
    write_text_file(out_file, j.dump(2) + "\n");

    // Per-observation TFP sidecar next to the result JSON.
    std::vector<ObsKey> keys = result.keys;
    Vector values = result.tfp_growth;
    if (first_diff) {
        auto [dk, dv] = first_difference(keys, values);
        keys = std::move(dk);
        values = std::move(dv);
    }
    csv::Table t;
    t.header = {"firm", "period", "tfp_growth"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        t.rows.push_back({keys[i].firm_id, std::to_string(keys[i].period),
                          csv::format_double(values(static_cast<Eigen::Index>(i)))});
    }
    fs::path sidecar(out_file);
    sidecar.replace_extension();
    csv::write_file(sidecar.string() + "_tfp.csv", t);

    std::cout << method_name(method) << ": beta_l=" << result.coefficients.beta_l
              << " beta_k=" << result.coefficients.beta_k;
    if (result.coefficients.beta_m) std::cout << " beta_m=" << *result.coefficients.beta_m;
    std::cout << "\n";
    return kExitOk;
}

int run_impute(const std::string& matrix_path, int n_components, double tol, int max_iter,
               const std::string& out_path) {
    std::vector<std::string> names;
    std::vector<std::string> row_ids;
    const Matrix raw = load_matrix_csv(matrix_path, names, &row_ids);
    auto [z, params] = standardize(raw, names);
    const ImputationResult result = iterative_impute(z, n_components, tol, max_iter);
    const Matrix completed = unstandardize(result.completed, params);
    write_matrix_csv(resolve_out(out_path), completed, names,
                     row_ids.empty() ? nullptr : &row_ids);
    std::cout << "imputation: " << result.n_iterations << " iterations, final change "
              << result.final_change << (result.converged ? "" : " (did not converge)") << "\n";
    return result.converged ? kExitOk : kExitStageFailure;
}

int run_pca(const std::string& matrix_path, int n_components, const std::string& out_prefix) {
    std::vector<std::string> names;
    std::vector<std::string> row_ids;
    const Matrix raw = load_matrix_csv(matrix_path, names, &row_ids);
    if (raw.hasNaN()) throw Error("pca: input has missing cells; run impute first");
    auto [z, params] = standardize(raw, names);
    PcaModel model = fit_pca(z, n_components, names);
    model.standardization = params;
    const Matrix scores = project(model, z);

    std::vector<std::string> pc_names;
    for (int s = 1; s <= n_components; ++s) pc_names.push_back("PC" + std::to_string(s));
    write_matrix_csv(resolve_out(out_prefix + "_loadings.csv"), model.loadings, pc_names, &names);
    write_matrix_csv(resolve_out(out_prefix + "_scores.csv"), scores, pc_names,
                     row_ids.empty() ? nullptr : &row_ids);

    json scree = json::array();
    for (std::size_t s = 0; s < model.eigenvalues.size(); ++s) {
        scree.push_back({{"component", s + 1},
                         {"eigenvalue", model.eigenvalues[s]},
                         {"fraction", model.variance_fractions[s]}});
    }
    write_text_file(resolve_out(out_prefix + "_scree.json"), scree.dump(2) + "\n");

    const auto correlations = loading_correlations(model, z);
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
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f%%",
                      100.0 * model.variance_fractions[static_cast<std::size_t>(cc.component - 1)]);
        corr.rows.push_back(
            {"PC " + std::to_string(cc.component), pct, join(cc.top_positive),
             join(cc.top_negative)});
    }
    csv::write_file(resolve_out(out_prefix + "_correlations.csv"), corr);
    std::cout << "pca: " << n_components << " components, PC1 explains "
              << model.variance_fractions[0] * 100.0 << "%\n";
    return kExitOk;
}

int run_som(const std::string& matrix_path, int rows, int cols, int epochs, std::uint64_t seed,
            const std::string& out_prefix) {
    std::vector<std::string> names;
    std::vector<std::string> row_ids;
    const Matrix raw = load_matrix_csv(matrix_path, names, &row_ids);
    if (raw.hasNaN()) throw Error("som: input has missing cells");
    auto [z, params] = standardize(raw, names);
    (void)params;
    SomConfig config;
    config.rows = rows;
    config.cols = cols;
    config.epochs = epochs;
    config.seed = seed;
    const SomModel model = train_som(z, config);

    write_matrix_csv(resolve_out(out_prefix + "_codebook.csv"), model.codebook, names, nullptr);
    csv::Table assign;
    assign.header = {"row", "node"};
    for (std::size_t i = 0; i < model.assignments.size(); ++i) {
        assign.rows.push_back({row_ids.empty() ? std::to_string(i) : row_ids[i],
                               std::to_string(model.assignments[i])});
    }
    csv::write_file(resolve_out(out_prefix + "_assignments.csv"), assign);

    const Matrix um = u_matrix(model);
    std::vector<std::string> col_names;
    for (int c = 0; c < model.config.cols; ++c) col_names.push_back("c" + std::to_string(c));
    write_matrix_csv(resolve_out(out_prefix + "_umatrix.csv"), um, col_names, nullptr);
    svg::write_heatmap(resolve_out(out_prefix + "_umatrix.svg"), um, "U-matrix");

    const ComponentPlanes planes = component_planes(model);
    for (std::size_t p = 0; p < planes.planes.size(); ++p) {
        const std::string plane_name = p < names.size() ? names[p] : "f" + std::to_string(p);
        write_matrix_csv(resolve_out(out_prefix + "_plane_" + plane_name + ".csv"),
                         planes.planes[p], col_names, nullptr);
        svg::write_heatmap(resolve_out(out_prefix + "_plane_" + plane_name + ".svg"),
                           planes.planes[p], "component plane: " + plane_name);
    }
    write_matrix_csv(resolve_out(out_prefix + "_counts.csv"), planes.counts.cast<double>(),
                     col_names, nullptr);
    svg::write_heatmap(resolve_out(out_prefix + "_counts.svg"), planes.counts.cast<double>(),
                       "node counts");
    std::cout << "som: " << model.config.rows << "x" << model.config.cols
              << " grid, quantization error " << model.quantization_error << " (initial "
              << model.initial_quantization_error << ")\n";
    return kExitOk;
}

int run_cluster(const std::string& matrix_path, const std::string& k_arg, int kmax, int gap_b,
                const std::string& on, std::uint64_t seed, const std::string& out_prefix) {
    std::vector<std::string> names;
    std::vector<std::string> row_ids;
    const Matrix raw = load_matrix_csv(matrix_path, names, &row_ids);
    if (raw.hasNaN()) throw Error("cluster: input has missing cells");

    Matrix target = raw;
    SomModel som_model;
    const bool via_som = on == "som";
    if (via_som) {
        auto [z, params] = standardize(raw, names);
        (void)params;
        SomConfig config;
        config.seed = Rng::stream_seed(seed, "som");
        som_model = train_som(z, config);
        target = som_model.codebook;
    }

    GapCurve gap;
    int k = 0;
    if (k_arg == "auto") {
        gap = gap_statistic(target, std::min<int>(kmax, static_cast<int>(target.rows())), gap_b,
                            Rng::stream_seed(seed, "gap"));
        k = gap.selected_gap;
    } else {
        k = std::stoi(k_arg);
        if (kmax >= 2) {
            gap = gap_statistic(target, std::min<int>(kmax, static_cast<int>(target.rows())),
                                gap_b, Rng::stream_seed(seed, "gap"));
        }
    }

    std::vector<int> labels;
    if (via_som) {
        labels = cluster_via_som(som_model, k, Rng::stream_seed(seed, "kmeans"));
    } else {
        labels = kmeans(target, k, Rng::stream_seed(seed, "kmeans")).labels;
    }

    csv::Table lt;
    lt.header = {"row", "cluster"};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        lt.rows.push_back({row_ids.empty() ? std::to_string(i) : row_ids[i],
                           std::to_string(labels[i])});
    }
    csv::write_file(resolve_out(out_prefix + "_labels.csv"), lt);

    if (!gap.ks.empty()) {
        json js;
        js["ks"] = gap.ks;
        js["wss"] = gap.wss_k;
        js["gap"] = gap.gap_k;
        js["sd"] = gap.sd_k;
        js["selected_gap"] = gap.selected_gap;
        js["selected_max_gap"] = gap.selected_max_gap;
        js["selected_elbow"] = gap.selected_elbow;
        js["k_used"] = k;
        write_text_file(resolve_out(out_prefix + "_gap.json"), js.dump(2) + "\n");
    }
    std::cout << "cluster: k=" << k << " on " << (via_som ? "som codebook" : "raw rows") << "\n";
    return kExitOk;
}

int run_pcr(const std::string& scores_path, const std::string& tfp_path,
            const std::string& out_path) {
    std::vector<std::string> names;
    std::vector<std::string> row_ids;
    const Matrix scores = load_matrix_csv(scores_path, names, &row_ids);
    std::vector<std::string> tfp_names;
    const Matrix tfp_m = load_matrix_csv(tfp_path, tfp_names, nullptr);
    if (tfp_m.cols() < 1 || tfp_m.rows() != scores.rows()) {
        throw LengthMismatch("pcr: tfp rows must align with scores rows");
    }
    const Vector tfp = tfp_m.col(tfp_m.cols() - 1);
    const RegressionReport report = pcr(tfp, scores, names);

    csv::Table t;
    t.header = {"term", "estimate", "std_error", "t_stat", "p_value", "stars"};
    char buf[64];
    for (std::size_t i = 0; i < report.terms.size(); ++i) {
        auto f4 = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.4f", v);
            return std::string(buf);
        };
        t.rows.push_back({report.terms[i], f4(report.coefficients[i]),
                          f4(report.standard_errors[i]), f4(report.t_stats[i]),
                          f4(report.p_values[i]), significance_stars(report.p_values[i])});
    }
    csv::write_file(resolve_out(out_path), t);
    std::cout << "pcr: n=" << report.n << " r2=" << report.r_squared << "\n";
    return kExitOk;
}

int run_lasso(const std::string& x_path, const std::string& y_path, int folds,
              std::uint64_t seed, const std::string& rule, const std::string& out_path) {
    std::vector<std::string> names;
    const Matrix X = load_matrix_csv(x_path, names, nullptr);
    std::vector<std::string> y_names;
    const Matrix y_m = load_matrix_csv(y_path, y_names, nullptr);
    if (X.hasNaN()) throw Error("lasso: design has missing cells");
    if (y_m.rows() != X.rows()) throw LengthMismatch("lasso: y rows must align with X rows");
    const Vector y = y_m.col(y_m.cols() - 1);

    const LassoResult result =
        lasso_cv(X, y, names, {}, folds, seed,
                 rule == "min" ? LassoRule::Min : LassoRule::OneSd);
    csv::Table t;
    t.header = {"term", "coefficient"};
    char buf[64];
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (result.coefficients[j] == 0.0) {
            t.rows.push_back({names[j], "."});
        } else {
            std::snprintf(buf, sizeof(buf), "%.4f", result.coefficients[j]);
            t.rows.push_back({names[j], buf});
        }
    }
    csv::write_file(resolve_out(out_path), t);
    std::cout << "lasso: lambda=" << result.lambda << " nonzeros=" << result.nonzero_terms.size()
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"firm productivity estimation and clustering toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic firm panel");
    std::string sim_config, sim_panel_out = "panel.csv", sim_truth_out = "truth.csv";
    simulate->add_option("--config", sim_config, "DGP config JSON");
    simulate->add_option("--panel-out", sim_panel_out, "panel CSV path");
    simulate->add_option("--truth-out", sim_truth_out, "latent truth CSV path");

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate production coefficients and TFP");
    std::string est_panel, est_schema, est_method = "acf", est_out = "result.json";
    int est_series = 3, est_markov = 3;
    bool est_first_diff = false;
    est->add_option("--panel", est_panel, "panel CSV")->required();
    est->add_option("--schema", est_schema, "schema JSON");
    est->add_option("--method", est_method, "ols|op|lp|acf");
    est->add_option("--series-degree", est_series, "first-stage polynomial degree");
    est->add_option("--markov-degree", est_markov, "Markov polynomial degree");
    est->add_flag("--first-difference", est_first_diff, "emit within-firm residual differences");
    est->add_option("--out", est_out, "result JSON path");

    // impute
    auto* imp = app.add_subcommand("impute", "complete a matrix by iterative regularized PCA");
    std::string imp_in, imp_out = "imputed.csv";
    int imp_s = 8, imp_max_iter = 1000;
    double imp_tol = 1e-6;
    imp->add_option("--matrix", imp_in, "matrix CSV (optional leading firm column)")->required();
    imp->add_option("--components", imp_s, "imputation rank");
    imp->add_option("--tol", imp_tol, "squared-change tolerance");
    imp->add_option("--max-iter", imp_max_iter, "iteration cap");
    imp->add_option("--out", imp_out, "completed matrix CSV");

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "fit principal components");
    std::string pca_in, pca_prefix = "pca";
    int pca_s = 8;
    pca_cmd->add_option("--matrix", pca_in, "matrix CSV")->required();
    pca_cmd->add_option("--components", pca_s, "number of components");
    pca_cmd->add_option("--out-prefix", pca_prefix, "output file prefix");

    // som
    auto* som_cmd = app.add_subcommand("som", "train a self-organizing map");
    std::string som_in, som_prefix = "som";
    int som_rows = 0, som_cols = 0, som_epochs = 200;
    std::uint64_t som_seed = 1;
    som_cmd->add_option("--matrix", som_in, "matrix CSV")->required();
    som_cmd->add_option("--rows", som_rows, "grid rows (0 = auto)");
    som_cmd->add_option("--cols", som_cols, "grid cols (0 = auto)");
    som_cmd->add_option("--epochs", som_epochs, "training epochs");
    som_cmd->add_option("--seed", som_seed, "random seed");
    som_cmd->add_option("--out-prefix", som_prefix, "output file prefix");

    // cluster
    auto* cl = app.add_subcommand("cluster", "k-means with gap/elbow model selection");
    std::string cl_in, cl_k = "auto", cl_on = "som", cl_prefix = "cluster";
    int cl_kmax = 8, cl_gap_b = 50;
    std::uint64_t cl_seed = 1;
    cl->add_option("--matrix", cl_in, "matrix CSV")->required();
    cl->add_option("--k", cl_k, "auto or a fixed cluster count");
    cl->add_option("--kmax", cl_kmax, "largest k examined");
    cl->add_option("--gap-B", cl_gap_b, "gap bootstrap references");
    cl->add_option("--on", cl_on, "som|raw");
    cl->add_option("--seed", cl_seed, "random seed");
    cl->add_option("--out-prefix", cl_prefix, "output file prefix");

    // pcr
    auto* pcr_cmd = app.add_subcommand("pcr", "regress TFP growth on PC scores");
    std::string pcr_scores, pcr_tfp, pcr_out = "pcr.csv";
    pcr_cmd->add_option("--scores", pcr_scores, "scores CSV")->required();
    pcr_cmd->add_option("--tfp", pcr_tfp, "per-row TFP CSV (last column used)")->required();
    pcr_cmd->add_option("--out", pcr_out, "report CSV");

    // lasso
    auto* lasso_cmd = app.add_subcommand("lasso", "cross-validated lasso on original variables");
    std::string lasso_x, lasso_y, lasso_rule = "one-sd", lasso_out = "lasso.csv";
    int lasso_folds = 10;
    std::uint64_t lasso_seed = 1;
    lasso_cmd->add_option("--x", lasso_x, "design CSV")->required();
    lasso_cmd->add_option("--y", lasso_y, "response CSV (last column used)")->required();
    lasso_cmd->add_option("--folds", lasso_folds, "CV folds");
    lasso_cmd->add_option("--seed", lasso_seed, "fold seed");
    lasso_cmd->add_option("--rule", lasso_rule, "one-sd|min");
    lasso_cmd->add_option("--out", lasso_out, "coefficients CSV");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run the full analysis pipeline");
    std::string pipe_config;
    std::string pipe_out_override;
    std::uint64_t pipe_seed = 0;
    bool pipe_seed_set = false;
    std::string pipe_method;
    std::string pipe_k;
    pipe->add_option("--config", pipe_config, "pipeline config JSON")->required();
    pipe->add_option("--out", pipe_out_override, "output directory override");
    pipe->add_option("--seed", pipe_seed, "seed override")->each([&](const std::string&) {
        pipe_seed_set = true;
    });
    pipe->add_option("--method", pipe_method, "estimator override: ols|op|lp|acf");
    pipe->add_option("--k", pipe_k, "cluster count override: auto or int");

    // report
    auto* rep = app.add_subcommand("report", "render a Markdown report from a manifest");
    std::string rep_manifest, rep_out = "report.md";
    rep->add_option("--manifest", rep_manifest, "manifest JSON")->required();
    rep->add_option("--out", rep_out, "Markdown output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(sim_config, sim_panel_out, sim_truth_out);
        if (est->parsed()) {
            return run_estimate(est_panel, est_schema, est_method, est_series, est_markov,
                                est_first_diff, est_out);
        }
        if (imp->parsed()) return run_impute(imp_in, imp_s, imp_tol, imp_max_iter, imp_out);
        if (pca_cmd->parsed()) return run_pca(pca_in, pca_s, pca_prefix);
        if (som_cmd->parsed()) {
            return run_som(som_in, som_rows, som_cols, som_epochs, som_seed, som_prefix);
        }
        if (cl->parsed()) {
            return run_cluster(cl_in, cl_k, cl_kmax, cl_gap_b, cl_on, cl_seed, cl_prefix);
        }
        if (pcr_cmd->parsed()) return run_pcr(pcr_scores, pcr_tfp, pcr_out);
        if (lasso_cmd->parsed()) {
            return run_lasso(lasso_x, lasso_y, lasso_folds, lasso_seed, lasso_rule, lasso_out);
        }
        if (pipe->parsed()) {
            PipelineConfig config;
            try {
                config = load_pipeline_config(pipe_config);
                if (!pipe_out_override.empty()) config.output_dir = pipe_out_override;
                if (pipe_seed_set) config.seed = pipe_seed;
                if (!pipe_method.empty()) config.method = method_from_name(pipe_method);
                if (!pipe_k.empty()) config.k = pipe_k == "auto" ? 0 : std::stoi(pipe_k);
                const char* env_out = std::getenv("FIRMPROD_OUT");
                if (env_out != nullptr && *env_out != '\0' &&
                    !fs::path(config.output_dir).is_absolute()) {
                    config.output_dir = (fs::path(env_out) / config.output_dir).string();
                }
                for (const auto& p : config.periods) {
                    if (!fs::exists(p.path)) {
                        throw InvalidConfig("input file not found: " + p.path);
                    }
                }
            } catch (const Error& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kExitConfigError;
            }
            const Manifest manifest = run_pipeline(config);
            std::cout << "pipeline: " << manifest.artifacts.size() << " artifacts in "
                      << config.output_dir << "\n";
            return kExitOk;
        }
        if (rep->parsed()) {
            const Manifest manifest = read_manifest(rep_manifest);
            const std::string dir = fs::path(rep_manifest).parent_path().string();
            write_text_file(resolve_out(rep_out), render_report(manifest, dir.empty() ? "." : dir));
            return kExitOk;
        }
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    }
    return kExitConfigError;
}
