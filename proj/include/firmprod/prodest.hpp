#pragma once

#include <optional>
#include <string>
#include <vector>

#include "firmprod/common.hpp"
#include "firmprod/panel.hpp"

namespace firmprod {

enum class Method { OLS, OP, LP, ACF };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct ObsKey {
    std::string firm_id;
    int period = 0;
};

struct ProductionCoefficients {
    double beta_0 = kMissing;
    double beta_l = kMissing;
    double beta_k = kMissing;
    std::optional<double> beta_m;
    std::optional<double> beta_a;
};

struct FirstStageFit {
    Vector phi_hat;  // fitted composite phi_t
    Vector eta_hat;  // ex-post shock residual
    std::optional<double> beta_l_first_stage;  // OP/LP only
    int polynomial_degree = 0;
    double r_squared = 0.0;
};

struct EstimatorDiagnostics {
    double gmm_objective = 0.0;
    int optimizer_iterations = 0;
    int sample_size = 0;   // rows used by the first stage
    int dropped_rows = 0;  // log-domain / proxy-positivity filter count
    int n_pairs = 0;       // consecutive-period pairs in the second stage
};

struct EstimatorResult {
    Method method = Method::OLS;
    ProductionCoefficients coefficients;
    FirstStageFit first_stage;
    Vector omega_hat;    // demeaned productivity estimate
    Vector tfp_growth;   // first-stage residuals, the downstream TFP measure
    EstimatorDiagnostics diagnostics;
    std::vector<ObsKey> keys;  // row-aligned with the vectors above
};

struct GmmSettings {
    int markov_poly_degree = 3;
    int series_degree = 3;
    double optimizer_tol = 1e-8;
    int max_iterations = 2000;
    int n_multistarts = 8;
    bool survival_correction = false;
    bool estimate_age = false;  // free beta_a in the OP second stage
};

EstimatorResult ols_solow(const FirmPanel& panel);

FirstStageFit op_first_stage(const FirmPanel& panel, const GmmSettings& settings = {});
ProductionCoefficients op_second_stage(const FirstStageFit& fit, const FirmPanel& panel,
                                       const GmmSettings& settings = {});
EstimatorResult op_estimate(const FirmPanel& panel, const GmmSettings& settings = {});
EstimatorResult lp_estimate(const FirmPanel& panel, const GmmSettings& settings = {});
EstimatorResult acf_estimate(const FirmPanel& panel, const GmmSettings& settings = {});

EstimatorResult estimate(const FirmPanel& panel, Method method,
                         const GmmSettings& settings = {});

// Within-firm first differences of a per-observation series (Eq.-(4)-style
// growth); each firm's first row is dropped.
std::pair<std::vector<ObsKey>, Vector> first_difference(const std::vector<ObsKey>& keys,
                                                        const Vector& values);

}  // namespace firmprod
