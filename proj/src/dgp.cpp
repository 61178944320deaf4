#include "firmprod/dgp.hpp"

#include <cmath>
#include <json.hpp>

#include "firmprod/rng.hpp"

namespace firmprod {

double capital_accumulation(double capital, double investment, double delta) {
    return (1.0 - delta) * capital + investment;
}

double investment_policy(double omega, double log_capital,
                         const std::array<double, 3>& coeffs) {
    return std::exp(coeffs[0] + coeffs[1] * omega + coeffs[2] * log_capital);
}

namespace {

void validate(const DgpConfig& c) {
    auto fail = [](const std::string& field) {
        throw InvalidConfig("invalid DGP config field: " + field);
    };
    if (c.n_firms <= 0) fail("n_firms");
    if (c.n_periods <= 0) fail("n_periods");
    if (c.delta < 0.0 || c.delta >= 1.0) fail("delta");
    if (c.rho <= -1.0 || c.rho >= 1.0) fail("rho");
    if (c.sigma_xi < 0.0) fail("sigma_xi");
    if (c.sigma_eta < 0.0) fail("sigma_eta");
    if (c.investment_coeffs[1] <= 0.0) fail("investment_coeffs.c1");
    if (c.n_countries <= 0) fail("n_countries");
    if (c.n_sectors <= 0) fail("n_sectors");
    if (c.labor_noise_sd < 0.0) fail("labor_noise_sd");
    if (c.m_noise_sd < 0.0) fail("m_noise_sd");
    if (c.accounting) {
        if (c.accounting->count <= 0) fail("accounting.count");
        if (c.accounting->rank <= 0 || c.accounting->rank > c.accounting->count) {
            fail("accounting.rank");
        }
        if (c.accounting->missing_rate < 0.0 || c.accounting->missing_rate >= 1.0) {
            fail("accounting.missing_rate");
        }
    }
}

std::string firm_label(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "F%06d", index + 1);
    return buf;
}

}  // namespace

std::pair<FirmPanel, SyntheticTruth> simulate_panel(const DgpConfig& config) {
    validate(config);

    FirmPanel panel;
    SyntheticTruth truth;
    panel.category_names = {"country", "sector"};

    // Accounting loadings are drawn once from their own stream so every firm
    // sees the same variable structure.
    std::vector<std::string> acc_names;
    std::vector<bool> acc_expense;
    Matrix acc_loadings;
    Vector acc_base;
    if (config.accounting) {
        const auto& acc = *config.accounting;
        Rng loading_rng = Rng::stream(config.seed, "dgp.accounting");
        acc_loadings = Matrix(acc.count, acc.rank);
        acc_base = Vector(acc.count);
        for (int j = 0; j < acc.count; ++j) {
            acc_names.push_back("acct_" + std::string(j < 9 ? "0" : "") + std::to_string(j + 1));
            acc_expense.push_back(j % 2 == 1);  // alternate revenue-like / expense-like
            acc_base(j) = loading_rng.uniform(1.0, 4.0);
            for (int r = 0; r < acc.rank; ++r) {
                acc_loadings(j, r) = loading_rng.normal(0.0, 1.0);
            }
        }
        for (std::size_t j = 0; j < acc_names.size(); ++j) {
            panel.variable_catalog.push_back({acc_names[j], acc_expense[j]});
        }
    }

    const double stationary_sd =
        config.sigma_xi / std::sqrt(1.0 - config.rho * config.rho);

    for (int f = 0; f < config.n_firms; ++f) {
        Rng rng = Rng::stream(config.seed, "dgp.firm", static_cast<std::uint64_t>(f));
        const std::string id = firm_label(f);
        const std::string country = "C" + std::to_string(rng.below(config.n_countries) + 1);
        const std::string sector = "S" + std::to_string(rng.below(config.n_sectors) + 1);

        // omega_{-1} seeds the lagged-labor timing; both draws are stationary.
        double omega_prev = rng.normal(0.0, stationary_sd);
        double xi = rng.normal(0.0, config.sigma_xi);
        double omega = config.rho * omega_prev + xi;
        double log_k = rng.normal(config.capital0_mean, config.capital0_sd);

        for (int t = 0; t < config.n_periods; ++t) {
            if (t > 0) {
                omega_prev = omega;
                xi = rng.normal(0.0, config.sigma_xi);
                omega = config.rho * omega_prev + xi;
            }
            if (config.exit_threshold && omega < *config.exit_threshold) {
                if (!truth.survived.empty() && !truth.firm_ids.empty() &&
                    truth.firm_ids.back() == id) {
                    truth.survived.back() = false;
                }
                break;
            }

            const double omega_for_labor = config.lagged_labor ? omega_prev : omega;
            const double log_l = config.labor_base + config.labor_omega * omega_for_labor +
                                 rng.normal(0.0, config.labor_noise_sd);
            const double log_m =
                config.m_base + config.m_omega * omega + rng.normal(0.0, config.m_noise_sd);
            const double age = static_cast<double>(t + 1);

            const double eta = rng.normal(0.0, config.sigma_eta);
            const double log_y = config.alpha_0 + config.alpha_l * log_l +
                                 config.alpha_k * log_k + config.alpha_m * log_m +
                                 config.beta_a * age + omega + eta;

            const double investment = investment_policy(omega, log_k, config.investment_coeffs);

            FirmObservation obs;
            obs.firm_id = id;
            obs.period = t + 1;
            obs.output = std::exp(log_y);
            obs.labor = std::exp(log_l);
            obs.capital = std::exp(log_k);
            obs.intermediates = std::exp(log_m);
            obs.investment = investment;
            obs.age = age;
            obs.categories["country"] = country;
            obs.categories["sector"] = sector;

            if (config.accounting) {
                const auto& acc = *config.accounting;
                Vector factors(acc.rank);
                factors(0) = omega;
                if (acc.rank > 1) factors(1) = log_k - config.capital0_mean;
                for (int r = 2; r < acc.rank; ++r) factors(r) = rng.normal(0.0, 1.0);
                for (int j = 0; j < acc.count; ++j) {
                    const double level = acc_base(j) + acc_loadings.row(j).dot(factors) +
                                         rng.normal(0.0, acc.noise_sd);
                    const bool missing = rng.uniform() < acc.missing_rate;
                    if (!missing) {
                        const double value = std::exp(level);
                        obs.accounting[acc_names[static_cast<std::size_t>(j)]] =
                            acc_expense[static_cast<std::size_t>(j)] ? -value : value;
                    }
                }
            }

            panel.observations.push_back(std::move(obs));
            truth.firm_ids.push_back(id);
            truth.periods.push_back(t + 1);
            truth.omega.push_back(omega);
            truth.xi.push_back(xi);
            truth.survived.push_back(true);

            log_k = std::log(capital_accumulation(std::exp(log_k), investment, config.delta));
        }
    }

    if (panel.observations.empty()) throw EmptyPanel("DGP emitted no observations");
    return {std::move(panel), std::move(truth)};
}

DgpConfig dgp_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("DGP config: ") + e.what());
    }
    DgpConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("alpha_0", c.alpha_0);
    get("alpha_l", c.alpha_l);
    get("alpha_k", c.alpha_k);
    get("alpha_m", c.alpha_m);
    get("beta_a", c.beta_a);
    get("delta", c.delta);
    get("rho", c.rho);
    get("sigma_xi", c.sigma_xi);
    get("sigma_eta", c.sigma_eta);
    get("n_firms", c.n_firms);
    get("n_periods", c.n_periods);
    get("seed", c.seed);
    get("labor_base", c.labor_base);
    get("labor_omega", c.labor_omega);
    get("labor_noise_sd", c.labor_noise_sd);
    get("m_base", c.m_base);
    get("m_omega", c.m_omega);
    get("m_noise_sd", c.m_noise_sd);
    get("lagged_labor", c.lagged_labor);
    get("capital0_mean", c.capital0_mean);
    get("capital0_sd", c.capital0_sd);
    get("n_countries", c.n_countries);
    get("n_sectors", c.n_sectors);
    if (j.contains("investment_coeffs")) {
        const auto a = j.at("investment_coeffs");
        if (!a.is_array() || a.size() != 3) {
            throw InvalidConfig("investment_coeffs must be [c0, c1, c2]");
        }
        for (int i = 0; i < 3; ++i) c.investment_coeffs[static_cast<std::size_t>(i)] = a[i];
    }
    if (j.contains("exit_threshold") && !j.at("exit_threshold").is_null()) {
        c.exit_threshold = j.at("exit_threshold").get<double>();
    }
    if (j.contains("accounting") && !j.at("accounting").is_null()) {
        AccountingSimConfig acc;
        const auto& ja = j.at("accounting");
        if (ja.contains("count")) acc.count = ja.at("count");
        if (ja.contains("rank")) acc.rank = ja.at("rank");
        if (ja.contains("noise_sd")) acc.noise_sd = ja.at("noise_sd");
        if (ja.contains("missing_rate")) acc.missing_rate = ja.at("missing_rate");
        c.accounting = acc;
    }
    return c;
}

}  // namespace firmprod
