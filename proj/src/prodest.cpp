#include "firmprod/prodest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "firmprod/linreg.hpp"
#include "firmprod/neldermead.hpp"
#include "firmprod/stats.hpp"

namespace firmprod {

std::string method_name(Method m) {
    switch (m) {
        case Method::OLS: return "OLS";
        case Method::OP: return "OP";
        case Method::LP: return "LP";
        case Method::ACF: return "ACF";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    std::string lower;
    for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "ols") return Method::OLS;
    if (lower == "op") return Method::OP;
    if (lower == "lp") return Method::LP;
    if (lower == "acf") return Method::ACF;
    throw Error("unknown estimation method: " + name);
}

namespace {

struct Sample {
    std::vector<ObsKey> keys;
    Vector y, l, k, m, i, a;  // logs of output/labor/capital/intermediates/investment; age raw
    std::vector<int> pair_prev, pair_cur;  // consecutive-period row pairs
    int dropped = 0;
};

struct Needs {
    bool intermediates = false;
    bool investment = false;
};

// Rows must have positive output, labor and capital, plus whatever the
// method's proxy requires; failing rows are dropped and counted.
Sample build_sample(const FirmPanel& panel, const Needs& needs) {
    Sample s;
    std::vector<double> ys, ls, ks, ms, is, as;
    for (const auto& obs : panel.observations) {
        auto positive = [](const std::optional<double>& v) { return v && *v > 0.0; };
        bool ok = positive(obs.output) && positive(obs.labor) && positive(obs.capital);
        if (needs.intermediates) ok = ok && positive(obs.intermediates);
        if (needs.investment) ok = ok && positive(obs.investment);
        if (!ok) {
            ++s.dropped;
            continue;
        }
        s.keys.push_back({obs.firm_id, obs.period});
        ys.push_back(std::log(*obs.output));
        ls.push_back(std::log(*obs.labor));
        ks.push_back(std::log(*obs.capital));
        ms.push_back(needs.intermediates ? std::log(*obs.intermediates) : kMissing);
        is.push_back(needs.investment ? std::log(*obs.investment) : kMissing);
        // Age imputed as the period index when the panel carries none.
        as.push_back(obs.age ? *obs.age : static_cast<double>(obs.period));
    }
    if (s.keys.empty()) throw TooFewRows("no usable rows after log-domain filters");

    auto to_vec = [](const std::vector<double>& v) {
        return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
    };
    s.y = to_vec(ys);
    s.l = to_vec(ls);
    s.k = to_vec(ks);
    s.m = to_vec(ms);
    s.i = to_vec(is);
    s.a = to_vec(as);

    for (std::size_t r = 1; r < s.keys.size(); ++r) {
        if (s.keys[r].firm_id == s.keys[r - 1].firm_id &&
            s.keys[r].period == s.keys[r - 1].period + 1) {
            s.pair_prev.push_back(static_cast<int>(r - 1));
            s.pair_cur.push_back(static_cast<int>(r));
        }
    }
    return s;
}

Matrix columns(std::initializer_list<Vector> cols) {
    Matrix m(cols.begin()->size(), static_cast<Eigen::Index>(cols.size()));
    Eigen::Index j = 0;
    for (const auto& c : cols) m.col(j++) = c;
    return m;
}

// First stage with labor entering linearly next to a polynomial in the
// proxy block: y = beta_l * l + phi(proxy) + eta.
struct PartialLinearFit {
    double beta_l = 0.0;
    Vector phi_hat, eta_hat;
    double r_squared = 0.0;
};

PartialLinearFit partial_linear_first_stage(const Sample& s, const Matrix& proxy_block,
                                            int degree) {
    const Matrix series = polynomial_series(proxy_block, degree);
    Matrix X(s.y.size(), series.cols() + 1);
    X.col(0) = s.l;
    X.rightCols(series.cols()) = series;
    const OlsFit fit = ols(X, s.y);

    PartialLinearFit out;
    out.beta_l = fit.coefficients(0);
    out.phi_hat = fit.fitted - out.beta_l * s.l;
    out.eta_hat = fit.residuals;
    out.r_squared = fit.r_squared;
    return out;
}

std::vector<Vector> multistarts_2d(double x0, double y0, int n) {
    const double offsets[][2] = {{0, 0},       {-0.2, 0},   {0.2, 0},    {0, -0.2},
                                 {0, 0.2},     {-0.2, -0.2}, {-0.2, 0.2}, {0.2, -0.2},
                                 {0.2, 0.2},   {-0.1, 0},   {0.1, 0},    {0, -0.1},
                                 {0, 0.1},     {-0.1, -0.1}, {-0.1, 0.1}, {0.1, -0.1}};
    auto clip = [](double v) { return std::clamp(v, 0.01, 0.99); };
    std::vector<Vector> starts;
    for (int i = 0; i < n && i < 16; ++i) {
        Vector v(2);
        v << clip(x0 + offsets[i][0]), clip(y0 + offsets[i][1]);
        starts.push_back(v);
    }
    return starts;
}

std::vector<Vector> multistarts_1d(double x0, int n) {
    const double offsets[] = {0, -0.2, 0.2, -0.1, 0.1, -0.3, 0.3, -0.05,
                              0.05, -0.15, 0.15, -0.25, 0.25, -0.4, 0.4, -0.35};
    std::vector<Vector> starts;
    for (int i = 0; i < n && i < 16; ++i) {
        Vector v(1);
        v << std::clamp(x0 + offsets[i], 0.01, 0.99);
        starts.push_back(v);
    }
    return starts;
}

// Innovation residuals from the polynomial Markov regression of omega_t on
// omega_{t-1} over the consecutive pairs.
Vector markov_innovations(const Vector& omega, const Sample& s, int degree) {
    const auto n_pairs = static_cast<Eigen::Index>(s.pair_cur.size());
    Vector w_prev(n_pairs), w_cur(n_pairs);
    for (Eigen::Index p = 0; p < n_pairs; ++p) {
        w_prev(p) = omega(s.pair_prev[static_cast<std::size_t>(p)]);
        w_cur(p) = omega(s.pair_cur[static_cast<std::size_t>(p)]);
    }
    Matrix basis(n_pairs, 1);
    basis.col(0) = w_prev;
    const Matrix design = polynomial_series(basis, degree);
    const Vector coef = ols_coefficients_fast(design, w_cur);
    return w_cur - design * coef;
}

// Damped Newton root polish for exactly identified moment systems; keeps the
// optimizer result when it cannot improve.
Vector newton_polish(const std::function<Vector(const Vector&)>& moments, Vector beta,
                     int max_iter = 25) {
    const double h = 1e-6;
    Vector g = moments(beta);
    double best = g.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::Index d = beta.size();
        Matrix jac(g.size(), d);
        for (Eigen::Index j = 0; j < d; ++j) {
            Vector hi = beta, lo = beta;
            hi(j) += h;
            lo(j) -= h;
            jac.col(j) = (moments(hi) - moments(lo)) / (2.0 * h);
        }
        const Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) break;
        const Vector step = lu.solve(g);
        double scale = 1.0;
        bool improved = false;
        for (int back = 0; back < 8; ++back) {
            const Vector cand = beta - scale * step;
            const Vector gc = moments(cand);
            if (gc.squaredNorm() < best) {
                beta = cand;
                g = gc;
                best = gc.squaredNorm();
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved || best < 1e-28) break;
    }
    return beta;
}

struct ProbitFit {
    Vector gamma;
    bool degenerate = false;  // all outcomes identical
    double constant_p = 1.0;
};

ProbitFit fit_probit(const Matrix& X, const std::vector<int>& outcome) {
    ProbitFit fit;
    const double mean_s =
        std::accumulate(outcome.begin(), outcome.end(), 0.0) / static_cast<double>(outcome.size());
    if (mean_s <= 0.0 || mean_s >= 1.0) {
        fit.degenerate = true;
        fit.constant_p = mean_s;
        return fit;
    }
    const Eigen::Index n = X.rows(), p = X.cols();
    Vector gamma = Vector::Zero(p);
    auto phi = [](double z) { return std::exp(-0.5 * z * z) * 0.3989422804014327; };
    for (int it = 0; it < 60; ++it) {
        Vector grad = Vector::Zero(p);
        Matrix hess = Matrix::Zero(p, p);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double z = X.row(r).dot(gamma);
            const double cdf = std::clamp(stats::normal_cdf(z), 1e-10, 1.0 - 1e-10);
            const double pdf = phi(z);
            const double s = outcome[static_cast<std::size_t>(r)];
            const double w = pdf * (s / cdf - (1.0 - s) / (1.0 - cdf));
            grad += w * X.row(r).transpose();
            // Expected-information weight keeps the Hessian positive definite.
            const double info = pdf * pdf / (cdf * (1.0 - cdf));
            hess += info * X.row(r).transpose() * X.row(r);
        }
        const Vector step = hess.ldlt().solve(grad);
        gamma += step;
        if (step.norm() < 1e-10) break;
    }
    fit.gamma = gamma;
    return fit;
}

EstimatorResult assemble_result(Method method, Sample&& sample, FirstStageFit&& first,
                                ProductionCoefficients&& coef, EstimatorDiagnostics&& diag) {
    EstimatorResult res;
    res.method = method;
    res.coefficients = std::move(coef);
    res.keys = std::move(sample.keys);
    res.diagnostics = std::move(diag);
    res.diagnostics.sample_size = static_cast<int>(res.keys.size());
    res.diagnostics.dropped_rows = sample.dropped;
    res.diagnostics.n_pairs = static_cast<int>(sample.pair_cur.size());

    // omega contribution left after removing the identified input terms.
    Vector omega = first.phi_hat;
    if (method == Method::ACF) omega = first.phi_hat;  // phi already excludes no inputs
    switch (method) {
        case Method::OLS:
            break;  // handled by caller
        case Method::OP:
            omega -= res.coefficients.beta_k * sample.k;
            if (res.coefficients.beta_a) omega -= *res.coefficients.beta_a * sample.a;
            break;
        case Method::LP:
            omega -= res.coefficients.beta_k * sample.k;
            if (res.coefficients.beta_m) omega -= *res.coefficients.beta_m * sample.m;
            break;
        case Method::ACF:
            omega -= res.coefficients.beta_l * sample.l + res.coefficients.beta_k * sample.k;
            break;
    }
    res.coefficients.beta_0 = omega.mean();
    res.omega_hat = omega.array() - res.coefficients.beta_0;
    res.tfp_growth = first.eta_hat;
    res.first_stage = std::move(first);
    return res;
}

}  // namespace

EstimatorResult ols_solow(const FirmPanel& panel) {
    // Present but non-positive values are a contract violation here, unlike
    // the proxy estimators' drop-and-count filters.
    for (const auto& obs : panel.observations) {
        auto check = [&](const std::optional<double>& v, const char* field) {
            if (v && *v <= 0.0) {
                throw NonPositiveValue(std::string(field) + " <= 0 for (" + obs.firm_id + ", " +
                                       std::to_string(obs.period) + ")");
            }
        };
        check(obs.output, "output");
        check(obs.labor, "labor");
        check(obs.capital, "capital");
        check(obs.intermediates, "intermediates");
    }
    Needs needs;
    needs.intermediates = true;
    Sample s = build_sample(panel, needs);

    Matrix X(s.y.size(), 4);
    X.col(0).setOnes();
    X.col(1) = s.l;
    X.col(2) = s.k;
    X.col(3) = s.m;
    const OlsFit fit = ols(X, s.y);

    EstimatorResult res;
    res.method = Method::OLS;
    res.keys = s.keys;
    res.coefficients.beta_0 = fit.coefficients(0);
    res.coefficients.beta_l = fit.coefficients(1);
    res.coefficients.beta_k = fit.coefficients(2);
    res.coefficients.beta_m = fit.coefficients(3);
    res.first_stage.phi_hat = fit.fitted;
    res.first_stage.eta_hat = fit.residuals;
    res.first_stage.beta_l_first_stage = fit.coefficients(1);
    res.first_stage.polynomial_degree = 1;
    res.first_stage.r_squared = fit.r_squared;
    res.omega_hat = fit.residuals;
    res.tfp_growth = fit.residuals;
    res.diagnostics.sample_size = static_cast<int>(s.keys.size());
    res.diagnostics.dropped_rows = s.dropped;
    res.diagnostics.n_pairs = static_cast<int>(s.pair_cur.size());
    return res;
}

FirstStageFit op_first_stage(const FirmPanel& panel, const GmmSettings& settings) {
    Needs needs;
    needs.investment = true;
    const Sample s = build_sample(panel, needs);
    const auto fit =
        partial_linear_first_stage(s, columns({s.i, s.a, s.k}), settings.series_degree);
    FirstStageFit out;
    out.beta_l_first_stage = fit.beta_l;
    out.phi_hat = fit.phi_hat;
    out.eta_hat = fit.eta_hat;
    out.polynomial_degree = settings.series_degree;
    out.r_squared = fit.r_squared;
    return out;
}

namespace {

// OLS anchor for the multistart lattice; falls back to midpoint values when
// the anchor regression cannot be run.
ProductionCoefficients ols_anchor(const FirmPanel& panel) {
    try {
        return ols_solow(panel).coefficients;
    } catch (const Error&) {
        ProductionCoefficients c;
        c.beta_l = 0.5;
        c.beta_k = 0.3;
        c.beta_m = 0.3;
        return c;
    }
}

}  // namespace

namespace {

ProductionCoefficients op_second_stage_impl(const FirstStageFit& fit, const FirmPanel& panel,
                                            const GmmSettings& settings,
                                            MinimizeResult* optimum) {
    Needs needs;
    needs.investment = true;
    const Sample s = build_sample(panel, needs);
    if (static_cast<Eigen::Index>(s.keys.size()) != fit.phi_hat.size()) {
        throw SchemaMismatch("op_second_stage: first stage fitted on a different panel");
    }
    if (s.pair_cur.empty()) throw NoConsecutivePeriods("no firm has two consecutive periods");
    const double beta_l = fit.beta_l_first_stage.value();

    // Survival probabilities from a probit on the proxy polynomial; constant
    // outcomes (no exit) degrade to the uncorrected objective.
    Vector survival_p;
    bool use_survival = false;
    if (settings.survival_correction) {
        int max_period = 0;
        std::map<std::string, int> last_period;
        for (const auto& obs : panel.observations) {
            max_period = std::max(max_period, obs.period);
            auto [it, inserted] = last_period.try_emplace(obs.firm_id, obs.period);
            if (!inserted) it->second = std::max(it->second, obs.period);
        }
        std::set<std::pair<std::string, int>> present;
        for (const auto& obs : panel.observations) present.insert({obs.firm_id, obs.period});

        std::vector<Eigen::Index> probit_rows;
        std::vector<int> outcome;
        for (std::size_t r = 0; r < s.keys.size(); ++r) {
            if (s.keys[r].period >= max_period) continue;  // censored
            probit_rows.push_back(static_cast<Eigen::Index>(r));
            outcome.push_back(present.count({s.keys[r].firm_id, s.keys[r].period + 1}) ? 1 : 0);
        }
        if (!probit_rows.empty()) {
            const Matrix proxy = columns({s.i, s.k, s.a});
            const Matrix design_all = polynomial_series(proxy, 2);
            Matrix design(static_cast<Eigen::Index>(probit_rows.size()), design_all.cols());
            for (std::size_t r = 0; r < probit_rows.size(); ++r) {
                design.row(static_cast<Eigen::Index>(r)) = design_all.row(probit_rows[r]);
            }
            const ProbitFit probit = fit_probit(design, outcome);
            if (!probit.degenerate) {
                survival_p = Vector(s.keys.size());
                for (std::size_t r = 0; r < s.keys.size(); ++r) {
                    survival_p(static_cast<Eigen::Index>(r)) =
                        stats::normal_cdf(design_all.row(static_cast<Eigen::Index>(r)).dot(probit.gamma));
                }
                use_survival = true;
            }
        }
    }

    const bool with_age = settings.estimate_age;
    const auto n_pairs = static_cast<Eigen::Index>(s.pair_cur.size());
    auto objective = [&](const Vector& theta) {
        const double bk = theta(0);
        const double ba = with_age ? theta(1) : 0.0;
        Vector dep(n_pairs), w_prev(n_pairs), p_prev(n_pairs);
        for (Eigen::Index p = 0; p < n_pairs; ++p) {
            const int cur = s.pair_cur[static_cast<std::size_t>(p)];
            const int prev = s.pair_prev[static_cast<std::size_t>(p)];
            dep(p) = s.y(cur) - beta_l * s.l(cur) - bk * s.k(cur) - ba * s.a(cur);
            w_prev(p) = fit.phi_hat(prev) - bk * s.k(prev) - ba * s.a(prev);
            if (use_survival) p_prev(p) = survival_p(prev);
        }
        Matrix basis(n_pairs, use_survival ? 2 : 1);
        basis.col(0) = w_prev;
        if (use_survival) basis.col(1) = p_prev;
        const Matrix design = polynomial_series(basis, settings.markov_poly_degree);
        const Vector coef = ols_coefficients_fast(design, dep);
        return (dep - design * coef).squaredNorm();
    };

    const ProductionCoefficients anchor = ols_anchor(panel);
    std::vector<Vector> starts;
    if (with_age) {
        for (auto& v : multistarts_2d(std::clamp(anchor.beta_k, 0.05, 0.95), 0.05,
                                      settings.n_multistarts)) {
            starts.push_back(v);
        }
    } else {
        starts = multistarts_1d(std::clamp(anchor.beta_k, 0.05, 0.95), settings.n_multistarts);
    }
    const MinimizeResult opt = minimize_derivative_free(objective, starts, settings.optimizer_tol,
                                                        settings.max_iterations);

    ProductionCoefficients coef;
    coef.beta_l = beta_l;
    coef.beta_k = opt.argmin(0);
    if (with_age) coef.beta_a = opt.argmin(1);
    if (optimum != nullptr) *optimum = opt;
    return coef;
}

}  // namespace

ProductionCoefficients op_second_stage(const FirstStageFit& fit, const FirmPanel& panel,
                                       const GmmSettings& settings) {
    return op_second_stage_impl(fit, panel, settings, nullptr);
}

EstimatorResult op_estimate(const FirmPanel& panel, const GmmSettings& settings) {
    {
        Needs needs;
        needs.investment = true;
        if (build_sample(panel, needs).pair_cur.empty()) {
            throw NoConsecutivePeriods("no firm has two consecutive periods");
        }
    }
    FirstStageFit first = op_first_stage(panel, settings);
    MinimizeResult optimum;
    ProductionCoefficients coef = op_second_stage_impl(first, panel, settings, &optimum);

    Needs needs;
    needs.investment = true;
    Sample s = build_sample(panel, needs);
    EstimatorDiagnostics diag;
    diag.gmm_objective = optimum.value;  // concentrated least-squares objective
    diag.optimizer_iterations = optimum.total_iterations;
    return assemble_result(Method::OP, std::move(s), std::move(first), std::move(coef),
                           std::move(diag));
}

EstimatorResult lp_estimate(const FirmPanel& panel, const GmmSettings& settings) {
    Needs needs;
    needs.intermediates = true;
    Sample s = build_sample(panel, needs);
    if (s.pair_cur.empty()) throw NoConsecutivePeriods("no firm has two consecutive periods");

    const auto first =
        partial_linear_first_stage(s, columns({s.m, s.k}), settings.series_degree);
    const auto n_pairs = static_cast<Eigen::Index>(s.pair_cur.size());

    auto moments = [&](const Vector& beta) {
        const Vector omega = first.phi_hat - beta(0) * s.k - beta(1) * s.m;
        const Vector xi = markov_innovations(omega, s, settings.markov_poly_degree);
        Vector g(2);
        double g_k = 0.0, g_m = 0.0;
        for (Eigen::Index p = 0; p < n_pairs; ++p) {
            g_k += xi(p) * s.k(s.pair_cur[static_cast<std::size_t>(p)]);
            g_m += xi(p) * s.m(s.pair_prev[static_cast<std::size_t>(p)]);
        }
        g << g_k / static_cast<double>(n_pairs), g_m / static_cast<double>(n_pairs);
        return g;
    };
    auto objective = [&](const Vector& beta) { return moments(beta).squaredNorm(); };

    const ProductionCoefficients anchor = ols_anchor(panel);
    const auto starts = multistarts_2d(std::clamp(anchor.beta_k, 0.05, 0.95),
                                       std::clamp(anchor.beta_m.value_or(0.3), 0.05, 0.95),
                                       settings.n_multistarts);
    MinimizeResult opt = minimize_derivative_free(objective, starts, settings.optimizer_tol,
                                                  settings.max_iterations);
    const Vector polished = newton_polish(moments, opt.argmin);
    if (objective(polished) < opt.value) {
        opt.argmin = polished;
        opt.value = objective(polished);
    }

    ProductionCoefficients coef;
    coef.beta_l = first.beta_l;
    coef.beta_k = opt.argmin(0);
    coef.beta_m = opt.argmin(1);

    FirstStageFit fs;
    fs.beta_l_first_stage = first.beta_l;
    fs.phi_hat = first.phi_hat;
    fs.eta_hat = first.eta_hat;
    fs.polynomial_degree = settings.series_degree;
    fs.r_squared = first.r_squared;

    EstimatorDiagnostics diag;
    diag.gmm_objective = opt.value;
    diag.optimizer_iterations = opt.total_iterations;
    return assemble_result(Method::LP, std::move(s), std::move(fs), std::move(coef),
                           std::move(diag));
}

EstimatorResult acf_estimate(const FirmPanel& panel, const GmmSettings& settings) {
    Needs needs;
    needs.intermediates = true;
    Sample s = build_sample(panel, needs);
    if (s.pair_cur.empty()) throw NoConsecutivePeriods("no firm has two consecutive periods");

    // First stage identifies only the composite phi(l, k, m).
    const Matrix design = polynomial_series(columns({s.l, s.k, s.m}), settings.series_degree);
    const OlsFit first = ols(design, s.y);
    const auto n_pairs = static_cast<Eigen::Index>(s.pair_cur.size());

    auto moments = [&](const Vector& beta) {
        const Vector omega = first.fitted - beta(0) * s.l - beta(1) * s.k;
        const Vector xi = markov_innovations(omega, s, settings.markov_poly_degree);
        Vector g(2);
        double g_l = 0.0, g_k = 0.0;
        for (Eigen::Index p = 0; p < n_pairs; ++p) {
            g_l += xi(p) * s.l(s.pair_prev[static_cast<std::size_t>(p)]);
            g_k += xi(p) * s.k(s.pair_cur[static_cast<std::size_t>(p)]);
        }
        g << g_l / static_cast<double>(n_pairs), g_k / static_cast<double>(n_pairs);
        return g;
    };
    auto objective = [&](const Vector& beta) { return moments(beta).squaredNorm(); };

    const ProductionCoefficients anchor = ols_anchor(panel);
    const auto starts = multistarts_2d(std::clamp(anchor.beta_l, 0.05, 0.95),
                                       std::clamp(anchor.beta_k, 0.05, 0.95),
                                       settings.n_multistarts);
    MinimizeResult opt = minimize_derivative_free(objective, starts, settings.optimizer_tol,
                                                  settings.max_iterations);
    const Vector polished = newton_polish(moments, opt.argmin);
    if (objective(polished) < opt.value) {
        opt.argmin = polished;
        opt.value = objective(polished);
    }

    ProductionCoefficients coef;
    coef.beta_l = opt.argmin(0);
    coef.beta_k = opt.argmin(1);

    FirstStageFit fs;
    fs.phi_hat = first.fitted;
    fs.eta_hat = first.residuals;
    fs.polynomial_degree = settings.series_degree;
    fs.r_squared = first.r_squared;

    EstimatorDiagnostics diag;
    diag.gmm_objective = opt.value;
    diag.optimizer_iterations = opt.total_iterations;
    return assemble_result(Method::ACF, std::move(s), std::move(fs), std::move(coef),
                           std::move(diag));
}

EstimatorResult estimate(const FirmPanel& panel, Method method, const GmmSettings& settings) {
    switch (method) {
        case Method::OLS: return ols_solow(panel);
        case Method::OP: return op_estimate(panel, settings);
        case Method::LP: return lp_estimate(panel, settings);
        case Method::ACF: return acf_estimate(panel, settings);
    }
    throw Error("estimate: unknown method");
}

std::pair<std::vector<ObsKey>, Vector> first_difference(const std::vector<ObsKey>& keys,
                                                        const Vector& values) {
    if (static_cast<Eigen::Index>(keys.size()) != values.size()) {
        throw LengthMismatch("first_difference: keys and values differ in length");
    }
    std::vector<ObsKey> out_keys;
    std::vector<double> out_values;
    for (std::size_t r = 1; r < keys.size(); ++r) {
        if (keys[r].firm_id == keys[r - 1].firm_id) {
            out_keys.push_back(keys[r]);
            out_values.push_back(values(static_cast<Eigen::Index>(r)) -
                                 values(static_cast<Eigen::Index>(r - 1)));
        }
    }
    Vector v = Eigen::Map<Vector>(out_values.data(), static_cast<Eigen::Index>(out_values.size()));
    return {std::move(out_keys), std::move(v)};
}

}  // namespace firmprod
