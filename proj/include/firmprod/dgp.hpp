#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "firmprod/common.hpp"
#include "firmprod/panel.hpp"

namespace firmprod {

// Optional block of synthetic accounting variables riding on a low-rank
// latent structure, so the imputation/PCA stages have realistic input.
struct AccountingSimConfig {
    int count = 12;
    int rank = 3;
    double noise_sd = 0.3;
    double missing_rate = 0.10;
};

struct DgpConfig {
    double alpha_0 = 1.0;
    double alpha_l = 0.6;
    double alpha_k = 0.3;
    double alpha_m = 0.2;
    double beta_a = 0.0;  // age elasticity; zero by default
    double delta = 0.10;
    double rho = 0.7;
    double sigma_xi = 0.3;
    double sigma_eta = 0.1;
    int n_firms = 1000;
    int n_periods = 10;
    // Investment policy i = exp(c0 + c1*omega + c2*log k); c1 > 0 keeps the
    // policy invertible in omega.
    std::array<double, 3> investment_coeffs{-2.302585092994046, 0.5, 1.0};  // c0 = log(0.10)
    std::optional<double> exit_threshold;
    std::uint64_t seed = 1;

    // Input endogeneity: log labor = labor_base + labor_omega * omega(+lag) + noise.
    double labor_base = 3.0;
    double labor_omega = 0.5;
    double labor_noise_sd = 0.1;
    // Small intermediates noise keeps the proxy near-invertible while still
    // denying OLS an exact control for omega; zero makes the proxy exact and
    // OLS consistent.
    double m_base = 2.0;
    double m_omega = 0.5;
    double m_noise_sd = 0.05;
    // Labor chosen one period ahead (l_t responds to omega_{t-1}); matches the
    // timing its second-stage moment conditions assume.
    bool lagged_labor = true;

    // Wide initial dispersion: firm capital spans orders of magnitude, and the
    // omega-independent variation keeps the second-stage moments conditioned.
    double capital0_mean = 5.0;  // log initial capital
    double capital0_sd = 2.0;

    std::optional<AccountingSimConfig> accounting;
    int n_countries = 3;
    int n_sectors = 5;
};

struct SyntheticTruth {
    // Row-aligned with the emitted panel observations.
    std::vector<std::string> firm_ids;
    std::vector<int> periods;
    std::vector<double> omega;
    std::vector<double> xi;      // innovation: omega_t = rho * omega_{t-1} + xi_t
    std::vector<bool> survived;  // false on a firm's final emitted row when it exits
};

// (1 - delta) * k + i
double capital_accumulation(double capital, double investment, double delta);

// exp(c0 + c1*omega + c2*log_capital); strictly increasing in omega.
double investment_policy(double omega, double log_capital,
                         const std::array<double, 3>& coeffs);

std::pair<FirmPanel, SyntheticTruth> simulate_panel(const DgpConfig& config);

DgpConfig dgp_config_from_json(const std::string& json_text);

}  // namespace firmprod
