#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "firmprod/cluster.hpp"
#include "firmprod/dgp.hpp"
#include "firmprod/linreg.hpp"
#include "firmprod/panel.hpp"
#include "firmprod/pca.hpp"
#include "firmprod/pipeline.hpp"
#include "firmprod/prodest.hpp"
#include "firmprod/regress.hpp"
#include "firmprod/som.hpp"
#include "firmprod/stats.hpp"

namespace py = pybind11;
using namespace firmprod;

namespace {

py::dict simulate_py(const std::string& config_json) {
    const DgpConfig config = dgp_config_from_json(config_json);
    const auto [panel, truth] = simulate_panel(config);

    py::dict out;
    py::list firms, periods, output, labor, capital, intermediates, investment, omega;
    for (std::size_t i = 0; i < panel.n(); ++i) {
        const auto& obs = panel.observations[i];
        firms.append(obs.firm_id);
        periods.append(obs.period);
        output.append(obs.output.value_or(std::nan("")));
        labor.append(obs.labor.value_or(std::nan("")));
        capital.append(obs.capital.value_or(std::nan("")));
        intermediates.append(obs.intermediates.value_or(std::nan("")));
        investment.append(obs.investment.value_or(std::nan("")));
        omega.append(truth.omega[i]);
    }
    out["firm"] = firms;
    out["period"] = periods;
    out["output"] = output;
    out["labor"] = labor;
    out["capital"] = capital;
    out["intermediates"] = intermediates;
    out["investment"] = investment;
    out["omega"] = omega;
    return out;
}

FirmPanel panel_from_arrays(const std::vector<std::string>& firm, const std::vector<int>& period,
                            const Vector& output, const Vector& labor, const Vector& capital,
                            const Vector& intermediates, const Vector& investment) {
    const auto n = firm.size();
    auto expect = [n](const Vector& v, const char* name) {
        if (static_cast<std::size_t>(v.size()) != n) {
            throw LengthMismatch(std::string("panel arrays must align: ") + name);
        }
    };
    expect(output, "output");
    expect(labor, "labor");
    expect(capital, "capital");
    if (period.size() != n) throw LengthMismatch("panel arrays must align: period");

    FirmPanel panel;
    for (std::size_t i = 0; i < n; ++i) {
        FirmObservation obs;
        obs.firm_id = firm[i];
        obs.period = period[i];
        const auto e = static_cast<Eigen::Index>(i);
        auto opt = [](double v) {
            return std::isnan(v) ? std::optional<double>{} : std::optional<double>(v);
        };
        obs.output = opt(output(e));
        obs.labor = opt(labor(e));
        obs.capital = opt(capital(e));
        if (intermediates.size() == output.size()) obs.intermediates = opt(intermediates(e));
        if (investment.size() == output.size()) obs.investment = opt(investment(e));
        panel.observations.push_back(std::move(obs));
    }
    std::sort(panel.observations.begin(), panel.observations.end(),
              [](const FirmObservation& a, const FirmObservation& b) {
                  return std::tie(a.firm_id, a.period) < std::tie(b.firm_id, b.period);
              });
    return panel;
}

py::dict estimate_py(const std::vector<std::string>& firm, const std::vector<int>& period,
                     const Vector& output, const Vector& labor, const Vector& capital,
                     const Vector& intermediates, const Vector& investment,
                     const std::string& method, int series_degree, int markov_degree) {
    const FirmPanel panel =
        panel_from_arrays(firm, period, output, labor, capital, intermediates, investment);
    GmmSettings settings;
    settings.series_degree = series_degree;
    settings.markov_poly_degree = markov_degree;
    const EstimatorResult res = estimate(panel, method_from_name(method), settings);

    py::dict out;
    out["method"] = method_name(res.method);
    out["beta_0"] = res.coefficients.beta_0;
    out["beta_l"] = res.coefficients.beta_l;
    out["beta_k"] = res.coefficients.beta_k;
    if (res.coefficients.beta_m) out["beta_m"] = *res.coefficients.beta_m;
    if (res.coefficients.beta_a) out["beta_a"] = *res.coefficients.beta_a;
    py::list firms, periods;
    for (const auto& key : res.keys) {
        firms.append(key.firm_id);
        periods.append(key.period);
    }
    out["firm"] = firms;
    out["period"] = periods;
    out["tfp_growth"] = res.tfp_growth;
    out["omega_hat"] = res.omega_hat;
    out["sample_size"] = res.diagnostics.sample_size;
    out["dropped_rows"] = res.diagnostics.dropped_rows;
    out["gmm_objective"] = res.diagnostics.gmm_objective;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "firm productivity estimation and clustering toolkit";

    py::register_exception<Error>(m, "FirmprodError");

    m.def("simulate", &simulate_py, py::arg("config_json") = "{}",
          "Simulate a synthetic firm panel; returns columns plus latent omega.");
    m.def("estimate", &estimate_py, py::arg("firm"), py::arg("period"), py::arg("output"),
          py::arg("labor"), py::arg("capital"), py::arg("intermediates") = Vector(),
          py::arg("investment") = Vector(), py::arg("method") = "acf",
          py::arg("series_degree") = 3, py::arg("markov_degree") = 3,
          "Estimate production coefficients and TFP residuals from panel arrays.");

    py::class_<StandardizationParams>(m, "StandardizationParams")
        .def_readonly("means", &StandardizationParams::means)
        .def_readonly("sds", &StandardizationParams::sds);
    m.def(
        "standardize",
        [](const Matrix& x) {
            auto [z, params] = standardize(x);
            return py::make_tuple(z, params);
        },
        py::arg("matrix"), "Column-wise z-scores over non-missing entries.");

    py::class_<PcaModel>(m, "PcaModel")
        .def_readonly("loadings", &PcaModel::loadings)
        .def_readonly("eigenvalues", &PcaModel::eigenvalues)
        .def_readonly("variance_fractions", &PcaModel::variance_fractions)
        .def_readonly("column_names", &PcaModel::column_names);
    m.def("fit_pca", &fit_pca, py::arg("matrix"), py::arg("n_components"),
          py::arg("column_names") = std::vector<std::string>{});
    m.def("project", &project, py::arg("model"), py::arg("matrix"),
          py::arg("column_names") = std::vector<std::string>{});

    py::class_<ImputationResult>(m, "ImputationResult")
        .def_readonly("completed", &ImputationResult::completed)
        .def_readonly("n_iterations", &ImputationResult::n_iterations)
        .def_readonly("final_change", &ImputationResult::final_change)
        .def_readonly("rank", &ImputationResult::rank)
        .def_readonly("converged", &ImputationResult::converged);
    m.def("iterative_impute", &iterative_impute, py::arg("matrix"), py::arg("n_components"),
          py::arg("tol") = 1e-6, py::arg("max_iter") = 1000);

    py::class_<SomConfig>(m, "SomConfig")
        .def(py::init<>())
        .def_readwrite("rows", &SomConfig::rows)
        .def_readwrite("cols", &SomConfig::cols)
        .def_readwrite("epochs", &SomConfig::epochs)
        .def_readwrite("lr_start", &SomConfig::lr_start)
        .def_readwrite("lr_end", &SomConfig::lr_end)
        .def_readwrite("radius_start", &SomConfig::radius_start)
        .def_readwrite("radius_end", &SomConfig::radius_end)
        .def_readwrite("seed", &SomConfig::seed);
    py::class_<SomModel>(m, "SomModel")
        .def_readonly("codebook", &SomModel::codebook)
        .def_readonly("assignments", &SomModel::assignments)
        .def_readonly("input_dim", &SomModel::input_dim)
        .def_readonly("quantization_error", &SomModel::quantization_error)
        .def_readonly("initial_quantization_error", &SomModel::initial_quantization_error)
        .def_property_readonly("rows", [](const SomModel& s) { return s.config.rows; })
        .def_property_readonly("cols", [](const SomModel& s) { return s.config.cols; });
    m.def("train_som", &train_som, py::arg("matrix"), py::arg("config") = SomConfig{});
    m.def("u_matrix", &u_matrix, py::arg("model"));

    py::class_<KMeansModel>(m, "KMeansModel")
        .def_readonly("k", &KMeansModel::k)
        .def_readonly("centroids", &KMeansModel::centroids)
        .def_readonly("labels", &KMeansModel::labels)
        .def_readonly("wss", &KMeansModel::wss)
        .def_readonly("iterations", &KMeansModel::iterations);
    m.def("kmeans", &kmeans, py::arg("matrix"), py::arg("k"), py::arg("seed") = 1,
          py::arg("max_iter") = 100, py::arg("n_restarts") = 10);
    m.def("elbow_select", &elbow_select, py::arg("wss_curve"));

    py::class_<GapCurve>(m, "GapCurve")
        .def_readonly("ks", &GapCurve::ks)
        .def_readonly("wss_k", &GapCurve::wss_k)
        .def_readonly("gap_k", &GapCurve::gap_k)
        .def_readonly("sd_k", &GapCurve::sd_k)
        .def_readonly("selected_gap", &GapCurve::selected_gap)
        .def_readonly("selected_max_gap", &GapCurve::selected_max_gap)
        .def_readonly("selected_elbow", &GapCurve::selected_elbow);
    m.def("gap_statistic", &gap_statistic, py::arg("matrix"), py::arg("kmax"), py::arg("B"),
          py::arg("seed") = 1);
    m.def("cluster_via_som", &cluster_via_som, py::arg("som_model"), py::arg("k"),
          py::arg("seed") = 1);

    m.def(
        "welch_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto r = stats::welch_t_test(a, b);
            return py::make_tuple(r.t, r.dof, r.p);
        },
        py::arg("a"), py::arg("b"), "Welch two-sample t-test -> (t, dof, p).");
    m.def("welch_matrix", &welch_matrix, py::arg("labels"), py::arg("tfp_growth"));

    py::class_<RegressionReport>(m, "RegressionReport")
        .def_readonly("terms", &RegressionReport::terms)
        .def_readonly("coefficients", &RegressionReport::coefficients)
        .def_readonly("standard_errors", &RegressionReport::standard_errors)
        .def_readonly("t_stats", &RegressionReport::t_stats)
        .def_readonly("p_values", &RegressionReport::p_values)
        .def_readonly("n", &RegressionReport::n)
        .def_readonly("r_squared", &RegressionReport::r_squared);
    m.def(
        "pcr",
        [](const Vector& tfp, const Matrix& scores, const std::vector<std::string>& names) {
            return pcr(tfp, scores, names);
        },
        py::arg("tfp_growth"), py::arg("scores"),
        py::arg("score_names") = std::vector<std::string>{});

    py::class_<LassoResult>(m, "LassoResult")
        .def_readonly("lambda_", &LassoResult::lambda)
        .def_readonly("intercept", &LassoResult::intercept)
        .def_readonly("coefficients", &LassoResult::coefficients)
        .def_readonly("nonzero_terms", &LassoResult::nonzero_terms)
        .def_readonly("cv_lambdas", &LassoResult::cv_lambdas)
        .def_readonly("cv_mean_mse", &LassoResult::cv_mean_mse)
        .def_readonly("cv_se_mse", &LassoResult::cv_se_mse);
    m.def("lasso_coordinate_descent", &lasso_coordinate_descent, py::arg("X"), py::arg("y"),
          py::arg("lambda_"), py::arg("coef_tol") = 1e-7, py::arg("max_sweeps") = 10000);
    m.def(
        "lasso_cv",
        [](const Matrix& X, const Vector& y, const std::vector<std::string>& names,
           std::vector<double> grid, int folds, std::uint64_t seed, const std::string& rule) {
            return lasso_cv(X, y, names, std::move(grid), folds, seed,
                            rule == "min" ? LassoRule::Min : LassoRule::OneSd);
        },
        py::arg("X"), py::arg("y"), py::arg("term_names"),
        py::arg("lambda_grid") = std::vector<double>{}, py::arg("folds") = 10,
        py::arg("seed") = 1, py::arg("rule") = "one-sd");

    m.def("polynomial_series", &polynomial_series, py::arg("columns"), py::arg("degree"));
    m.def(
        "run_pipeline_json",
        [](const std::string& config_json) {
            const Manifest manifest = run_pipeline(pipeline_config_from_json(config_json));
            py::list files;
            for (const auto& a : manifest.artifacts) files.append(a.file);
            return files;
        },
        py::arg("config_json"), "Run the full pipeline; returns the artifact list.");
}
