#include "firmprod/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "firmprod/csv.hpp"
#include "firmprod/stats.hpp"

namespace firmprod {

namespace {

bool is_core_field(const std::string& var) {
    return var == "output" || var == "labor" || var == "capital" || var == "intermediates" ||
           var == "investment" || var == "age";
}

std::optional<double>& core_field(FirmObservation& obs, const std::string& var) {
    if (var == "output") return obs.output;
    if (var == "labor") return obs.labor;
    if (var == "capital") return obs.capital;
    if (var == "intermediates") return obs.intermediates;
    if (var == "investment") return obs.investment;
    return obs.age;
}

void sort_panel(FirmPanel& panel) {
    std::sort(panel.observations.begin(), panel.observations.end(),
              [](const FirmObservation& a, const FirmObservation& b) {
                  if (a.firm_id != b.firm_id) return a.firm_id < b.firm_id;
                  return a.period < b.period;
              });
}

}  // namespace

bool FirmPanel::has_variable(const std::string& name) const {
    for (const auto& v : variable_catalog) {
        if (v.name == name) return true;
    }
    return false;
}

std::optional<double> observation_value(const FirmObservation& obs, const std::string& var) {
    if (is_core_field(var)) return core_field(const_cast<FirmObservation&>(obs), var);
    const auto it = obs.accounting.find(var);
    if (it == obs.accounting.end()) return std::nullopt;
    return it->second;
}

FirmPanel panel_from_csv(const std::string& csv_text, const PanelSchema& schema) {
    const csv::Table table = csv::parse(csv_text);

    struct Mapped {
        int firm, period, output, labor, capital, intermediates, investment, age;
    } idx{};
    auto require = [&](const std::string& name) {
        const int c = table.col(name);
        if (c < 0) throw MissingColumn("missing column: " + name);
        return c;
    };
    auto optional_col = [&](const std::string& name) {
        return name.empty() ? -1 : require(name);
    };
    idx.firm = require(schema.firm);
    idx.period = require(schema.period);
    idx.output = require(schema.output);
    idx.labor = require(schema.labor);
    idx.capital = require(schema.capital);
    idx.intermediates = optional_col(schema.intermediates);
    idx.investment = optional_col(schema.investment);
    idx.age = optional_col(schema.age);

    std::vector<int> category_cols;
    for (const auto& name : schema.categories) category_cols.push_back(require(name));

    std::set<int> used{idx.firm, idx.period, idx.output, idx.labor, idx.capital};
    for (int c : {idx.intermediates, idx.investment, idx.age}) {
        if (c >= 0) used.insert(c);
    }
    for (int c : category_cols) used.insert(c);

    FirmPanel panel;
    std::vector<int> accounting_cols;
    for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
        if (!used.count(c)) {
            accounting_cols.push_back(c);
            panel.variable_catalog.push_back({table.header[c], false});
        }
    }
    panel.category_names = schema.categories;

    std::set<std::pair<std::string, int>> keys;
    for (const auto& row : table.rows) {
        FirmObservation obs;
        obs.firm_id = row[idx.firm];
        const auto period = csv::parse_double(row[idx.period]);
        if (!period) throw ParseError("unparseable period for firm " + obs.firm_id);
        obs.period = static_cast<int>(std::llround(*period));
        if (!keys.insert({obs.firm_id, obs.period}).second) {
            throw DuplicateKey("duplicate (firm, period): (" + obs.firm_id + ", " +
                               std::to_string(obs.period) + ")");
        }
        obs.output = csv::parse_double(row[idx.output]);
        obs.labor = csv::parse_double(row[idx.labor]);
        obs.capital = csv::parse_double(row[idx.capital]);
        if (idx.intermediates >= 0) obs.intermediates = csv::parse_double(row[idx.intermediates]);
        if (idx.investment >= 0) obs.investment = csv::parse_double(row[idx.investment]);
        if (idx.age >= 0) obs.age = csv::parse_double(row[idx.age]);
        for (std::size_t i = 0; i < category_cols.size(); ++i) {
            obs.categories[schema.categories[i]] = row[category_cols[i]];
        }
        for (std::size_t i = 0; i < accounting_cols.size(); ++i) {
            if (const auto v = csv::parse_double(row[accounting_cols[i]])) {
                obs.accounting[panel.variable_catalog[i].name] = *v;
            }
        }
        panel.observations.push_back(std::move(obs));
    }
    if (panel.observations.empty()) throw EmptyPanel("panel has no rows");
    sort_panel(panel);

    // Sign convention inferred from the data: all-nonpositive with at least
    // one strictly negative value marks an expense-like variable.
    for (auto& spec : panel.variable_catalog) {
        bool any_negative = false;
        bool any_positive = false;
        for (const auto& obs : panel.observations) {
            const auto it = obs.accounting.find(spec.name);
            if (it == obs.accounting.end()) continue;
            if (it->second > 0.0) any_positive = true;
            if (it->second < 0.0) any_negative = true;
        }
        spec.expense_like = any_negative && !any_positive;
    }
    return panel;
}

FirmPanel load_panel(const std::string& path, const PanelSchema& schema) {
    const csv::Table table = csv::read_file(path);
    return panel_from_csv(csv::to_string(table), schema);
}

void save_panel(const std::string& path, const FirmPanel& panel, const PanelSchema& schema) {
    csv::Table table;
    table.header = {schema.firm, schema.period, schema.output, schema.labor, schema.capital};
    if (!schema.intermediates.empty()) table.header.push_back(schema.intermediates);
    if (!schema.investment.empty()) table.header.push_back(schema.investment);
    if (!schema.age.empty()) table.header.push_back(schema.age);
    for (const auto& c : schema.categories) table.header.push_back(c);
    for (const auto& v : panel.variable_catalog) table.header.push_back(v.name);

    auto fmt = [](const std::optional<double>& v) {
        return v ? csv::format_double(*v) : std::string();
    };
    for (const auto& obs : panel.observations) {
        std::vector<std::string> row;
        row.push_back(obs.firm_id);
        row.push_back(std::to_string(obs.period));
        row.push_back(fmt(obs.output));
        row.push_back(fmt(obs.labor));
        row.push_back(fmt(obs.capital));
        if (!schema.intermediates.empty()) row.push_back(fmt(obs.intermediates));
        if (!schema.investment.empty()) row.push_back(fmt(obs.investment));
        if (!schema.age.empty()) row.push_back(fmt(obs.age));
        for (const auto& c : schema.categories) {
            const auto it = obs.categories.find(c);
            row.push_back(it == obs.categories.end() ? "" : it->second);
        }
        for (const auto& v : panel.variable_catalog) {
            const auto it = obs.accounting.find(v.name);
            row.push_back(it == obs.accounting.end() ? "" : csv::format_double(it->second));
        }
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

FirmPanel per_worker_transform(const FirmPanel& panel, const std::vector<std::string>& vars) {
    for (const auto& var : vars) {
        if (var == "labor") throw UnknownVariable("cannot divide labor by itself");
        if (!is_core_field(var) && !panel.has_variable(var)) {
            throw UnknownVariable("unknown variable: " + var);
        }
    }
    FirmPanel out = panel;
    for (auto& obs : out.observations) {
        if (!obs.labor || *obs.labor <= 0.0) {
            throw ZeroLabor("labor must be positive for (" + obs.firm_id + ", " +
                            std::to_string(obs.period) + ")");
        }
        const double workers = *obs.labor;
        for (const auto& var : vars) {
            if (is_core_field(var)) {
                auto& field = core_field(obs, var);
                if (field) field = *field / workers;
            } else if (auto it = obs.accounting.find(var); it != obs.accounting.end()) {
                it->second /= workers;
            }
        }
    }
    return out;
}

ScreeningReport screen_missing(const FirmPanel& panel, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error("screen_missing: threshold must be in (0, 1]");
    }
    ScreeningReport report;
    report.threshold = threshold;
    const double rows = static_cast<double>(panel.n());
    for (const auto& spec : panel.variable_catalog) {
        std::size_t observed = 0;
        for (const auto& obs : panel.observations) observed += obs.accounting.count(spec.name);
        const double fraction = rows > 0 ? static_cast<double>(observed) / rows : 0.0;
        if (fraction >= threshold) {
            report.kept.push_back(spec.name);
        } else {
            report.dropped.emplace_back(spec.name, fraction);
        }
    }
    return report;
}

std::pair<Matrix, StandardizationParams> standardize(const Matrix& matrix,
                                                     const std::vector<std::string>& names) {
    StandardizationParams params;
    Matrix out = matrix;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        std::vector<double> observed;
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (!is_missing(matrix(i, j))) observed.push_back(matrix(i, j));
        }
        const std::string label =
            j < static_cast<Eigen::Index>(names.size()) ? names[j] : "column " + std::to_string(j);
        if (observed.size() < 2) {
            throw ConstantColumn("fewer than 2 observed values in " + label);
        }
        const double m = stats::mean(observed);
        const double sd = *stats::sample_sd(observed);
        if (sd <= 0.0) throw ConstantColumn("zero variance in " + label);
        params.means.push_back(m);
        params.sds.push_back(sd);
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (!is_missing(out(i, j))) out(i, j) = (out(i, j) - m) / sd;
        }
    }
    return {out, params};
}

Matrix unstandardize(const Matrix& matrix, const StandardizationParams& params) {
    if (static_cast<std::size_t>(matrix.cols()) != params.means.size()) {
        throw SchemaMismatch("unstandardize: column count mismatch");
    }
    Matrix out = matrix;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (!is_missing(out(i, j))) out(i, j) = out(i, j) * params.sds[j] + params.means[j];
        }
    }
    return out;
}

Matrix apply_standardization(const Matrix& matrix, const StandardizationParams& params) {
    if (static_cast<std::size_t>(matrix.cols()) != params.means.size()) {
        throw SchemaMismatch("apply_standardization: column count mismatch");
    }
    Matrix out = matrix;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (!is_missing(out(i, j))) out(i, j) = (out(i, j) - params.means[j]) / params.sds[j];
        }
    }
    return out;
}

std::vector<StatsRow> descriptive_stats(const FirmPanel& panel,
                                        const std::vector<std::string>& vars) {
    std::vector<StatsRow> rows;
    for (const auto& var : vars) {
        if (!is_core_field(var) && !panel.has_variable(var)) {
            throw UnknownVariable("unknown variable: " + var);
        }
        std::vector<double> values;
        for (const auto& obs : panel.observations) {
            if (const auto v = observation_value(obs, var)) values.push_back(*v);
        }
        StatsRow row;
        row.name = var;
        row.n = values.size();
        if (!values.empty()) {
            row.mean = stats::mean(values);
            row.pctl85 = stats::percentile(values, 0.85);
            row.max = *std::max_element(values.begin(), values.end());
            if (const auto sd = stats::sample_sd(values)) row.sd = *sd;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

FirmPanel average_periods(const FirmPanel& panel, int first_period, int last_period) {
    FirmPanel out;
    out.variable_catalog = panel.variable_catalog;
    out.category_names = panel.category_names;

    std::vector<const FirmObservation*> window;
    auto flush = [&] {
        if (window.empty()) return;
        FirmObservation merged;
        merged.firm_id = window.front()->firm_id;
        merged.period = last_period;
        auto avg_core = [&](const std::string& var) {
            std::vector<double> vals;
            for (const auto* obs : window) {
                if (const auto v = observation_value(*obs, var)) vals.push_back(*v);
            }
            if (!vals.empty()) core_field(merged, var) = stats::mean(vals);
        };
        for (const char* var : {"output", "labor", "capital", "intermediates", "investment", "age"}) {
            avg_core(var);
        }
        for (const auto& spec : panel.variable_catalog) {
            std::vector<double> vals;
            for (const auto* obs : window) {
                const auto it = obs->accounting.find(spec.name);
                if (it != obs->accounting.end()) vals.push_back(it->second);
            }
            if (!vals.empty()) merged.accounting[spec.name] = stats::mean(vals);
        }
        merged.categories = window.back()->categories;
        out.observations.push_back(std::move(merged));
        window.clear();
    };

    for (const auto& obs : panel.observations) {
        if (obs.period < first_period || obs.period > last_period) continue;
        if (!window.empty() && window.front()->firm_id != obs.firm_id) flush();
        window.push_back(&obs);
    }
    flush();
    if (out.observations.empty()) throw EmptyPanel("no observations in period window");
    return out;
}

Matrix panel_matrix(const FirmPanel& panel, const std::vector<std::string>& vars) {
    Matrix m(static_cast<Eigen::Index>(panel.n()), static_cast<Eigen::Index>(vars.size()));
    m.setConstant(kMissing);
    for (std::size_t i = 0; i < panel.n(); ++i) {
        for (std::size_t j = 0; j < vars.size(); ++j) {
            if (const auto v = observation_value(panel.observations[i], vars[j])) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
            }
        }
    }
    return m;
}

}  // namespace firmprod
