#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "firmprod/common.hpp"

namespace firmprod {

struct FirmObservation {
    std::string firm_id;
    int period = 0;
    std::optional<double> output;         // final goods, currency
    std::optional<double> labor;          // worker count
    std::optional<double> capital;        // fixed assets, currency
    std::optional<double> intermediates;  // currency
    std::optional<double> investment;     // currency
    std::optional<double> age;            // years
    std::map<std::string, double> accounting;  // absent key = missing
    std::map<std::string, std::string> categories;
};

struct VariableSpec {
    std::string name;
    bool expense_like = false;  // sign convention: expense-like values are <= 0
};

struct FirmPanel {
    std::vector<FirmObservation> observations;  // sorted by (firm_id, period)
    std::vector<VariableSpec> variable_catalog;
    std::vector<std::string> category_names;

    std::size_t n() const { return observations.size(); }
    bool has_variable(const std::string& name) const;
};

struct ScreeningReport {
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, double>> dropped;  // name, observed fraction
    double threshold = 0.0;
};

struct StandardizationParams {
    std::vector<double> means;
    std::vector<double> sds;
};

struct PanelSchema {
    std::string firm = "firm";
    std::string period = "period";
    std::string output = "output";
    std::string labor = "labor";
    std::string capital = "capital";
    std::string intermediates;  // optional columns: empty name = not mapped
    std::string investment;
    std::string age;
    std::vector<std::string> categories;
};

struct StatsRow {
    std::string name;
    std::size_t n = 0;
    double mean = kMissing;
    double pctl85 = kMissing;
    double max = kMissing;
    double sd = kMissing;  // missing when n < 2
};

FirmPanel load_panel(const std::string& path, const PanelSchema& schema);
void save_panel(const std::string& path, const FirmPanel& panel, const PanelSchema& schema);

// In-memory variant of load_panel, same contract.
FirmPanel panel_from_csv(const std::string& csv_text, const PanelSchema& schema);

// Divides each listed variable (core field or accounting name) by the worker
// count; missing values stay missing.
FirmPanel per_worker_transform(const FirmPanel& panel, const std::vector<std::string>& vars);

ScreeningReport screen_missing(const FirmPanel& panel, double threshold);

// Column-wise z-scoring over non-missing entries; missing cells untouched.
std::pair<Matrix, StandardizationParams> standardize(const Matrix& matrix,
                                                     const std::vector<std::string>& names = {});
Matrix unstandardize(const Matrix& matrix, const StandardizationParams& params);
Matrix apply_standardization(const Matrix& matrix, const StandardizationParams& params);

std::vector<StatsRow> descriptive_stats(const FirmPanel& panel,
                                        const std::vector<std::string>& vars);

// One observation per firm: numeric fields averaged over non-missing values
// in [first_period, last_period], categories taken from the last observation.
// Firms without any observation in the window are dropped.
FirmPanel average_periods(const FirmPanel& panel, int first_period, int last_period);

// n x p matrix of the named variables (core or accounting), missing = NaN,
// rows aligned with panel.observations.
Matrix panel_matrix(const FirmPanel& panel, const std::vector<std::string>& vars);

// Value of a core field or accounting variable; nullopt when missing.
std::optional<double> observation_value(const FirmObservation& obs, const std::string& var);

}  // namespace firmprod
