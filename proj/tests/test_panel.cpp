#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "firmprod/panel.hpp"
#include "firmprod/rng.hpp"
#include "firmprod/stats.hpp"

using namespace firmprod;

namespace {

PanelSchema test_schema() {
    PanelSchema s;
    s.intermediates = "intermediates";
    s.categories = {"country"};
    return s;
}

const char* kBasicCsv =
    "firm,period,output,labor,capital,intermediates,country,sales,rd_costs\n"
    "F1,2019,100,4,50,20,IT,200,-5\n"
    "F1,2020,110,5,55,22,IT,210,-6\n"
    "F2,2019,80,2,40,,DE,150,\n"
    "F2,2020,90,2,45,18,DE,160,-2\n";

}  // namespace

TEST_CASE("load_panel: basic parse, catalog from header") {
    const FirmPanel panel = panel_from_csv(kBasicCsv, test_schema());
    CHECK(panel.n() == 4);
    REQUIRE(panel.variable_catalog.size() == 2);
    CHECK(panel.variable_catalog[0].name == "sales");
    CHECK(panel.variable_catalog[1].name == "rd_costs");
    CHECK(panel.variable_catalog[1].expense_like);
    CHECK(!panel.variable_catalog[0].expense_like);
    CHECK(panel.observations[0].firm_id == "F1");
    CHECK(panel.observations[0].period == 2019);
    CHECK(panel.observations[0].categories.at("country") == "IT");
}

TEST_CASE("load_panel: blank cell becomes missing, never zero") {
    const FirmPanel panel = panel_from_csv(kBasicCsv, test_schema());
    const auto& f2_2019 = panel.observations[2];
    CHECK(f2_2019.firm_id == "F2");
    CHECK(!f2_2019.intermediates.has_value());
    CHECK(f2_2019.accounting.count("rd_costs") == 0);
    CHECK(f2_2019.accounting.at("sales") == doctest::Approx(150.0));
}

TEST_CASE("load_panel: duplicate (firm, period) rejected") {
    const std::string csv =
        "firm,period,output,labor,capital\n"
        "F1,2019,1,1,1\n"
        "F1,2019,2,2,2\n";
    CHECK_THROWS_AS(panel_from_csv(csv, PanelSchema{}), DuplicateKey);
}

TEST_CASE("load_panel: missing required column") {
    CHECK_THROWS_AS(panel_from_csv("firm,period,output,labor\nF1,1,1,1\n", PanelSchema{}),
                    MissingColumn);
}

TEST_CASE("load_panel: empty panel") {
    CHECK_THROWS_AS(panel_from_csv("firm,period,output,labor,capital\n", PanelSchema{}),
                    EmptyPanel);
}

TEST_CASE("per_worker_transform: division, identity, missing propagation") {
    const FirmPanel panel = panel_from_csv(kBasicCsv, test_schema());
    const FirmPanel out = per_worker_transform(panel, {"output", "sales", "rd_costs"});
    CHECK(*out.observations[0].output == doctest::Approx(25.0));  // 100 / 4
    CHECK(out.observations[0].accounting.at("sales") == doctest::Approx(50.0));
    // labor 2 firm F2 2019: rd_costs missing stays missing
    CHECK(out.observations[2].accounting.count("rd_costs") == 0);
    // untouched variables keep their values
    CHECK(*out.observations[0].capital == doctest::Approx(50.0));
}

TEST_CASE("per_worker_transform: labor of one leaves values unchanged") {
    const std::string csv =
        "firm,period,output,labor,capital\n"
        "F1,1,42,1,10\n";
    const FirmPanel out = per_worker_transform(panel_from_csv(csv, PanelSchema{}), {"output"});
    CHECK(*out.observations[0].output == doctest::Approx(42.0));
}

TEST_CASE("per_worker_transform: zero labor rejected") {
    const std::string csv =
        "firm,period,output,labor,capital\n"
        "F1,1,42,0,10\n";
    CHECK_THROWS_AS(per_worker_transform(panel_from_csv(csv, PanelSchema{}), {"output"}),
                    ZeroLabor);
}

TEST_CASE("per_worker_transform round-trip: multiplying back restores values") {
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        std::string csv = "firm,period,output,labor,capital,v1\n";
        std::vector<double> outputs, labors, v1s;
        for (int i = 0; i < 30; ++i) {
            const double out = std::exp(rng.normal(3, 1));
            const double lab = std::exp(rng.normal(1, 0.5));
            const double v1 = rng.normal(0, 10);
            outputs.push_back(out);
            labors.push_back(lab);
            v1s.push_back(v1);
            csv += "F" + std::to_string(i) + ",1," + std::to_string(out) + "," +
                   std::to_string(lab) + ",1," + std::to_string(v1) + "\n";
        }
        const FirmPanel panel = panel_from_csv(csv, PanelSchema{});
        const FirmPanel pw = per_worker_transform(panel, {"output", "v1"});
        for (std::size_t i = 0; i < panel.n(); ++i) {
            const auto& orig = panel.observations[i];
            const auto& derived = pw.observations[i];
            CHECK(*derived.output * *derived.labor ==
                  doctest::Approx(*orig.output).epsilon(1e-12));
            CHECK(derived.accounting.at("v1") * *derived.labor ==
                  doctest::Approx(orig.accounting.at("v1")).epsilon(1e-12));
        }
    }
}

TEST_CASE("screen_missing: threshold logic and the paper example fraction") {
    // 17000 observed out of 19852 rows -> 0.8563 >= 0.85 keeps the variable.
    CHECK(17000.0 / 19852.0 >= 0.85);

    std::string csv = "firm,period,output,labor,capital,mostly,half\n";
    for (int i = 0; i < 100; ++i) {
        csv += "F" + std::to_string(i) + ",1,1,1,1," + (i < 86 ? "1.0" : "") + "," +
               (i < 50 ? "2.0" : "") + "\n";
    }
    const FirmPanel panel = panel_from_csv(csv, PanelSchema{});
    const ScreeningReport report = screen_missing(panel, 0.85);
    REQUIRE(report.kept.size() == 1);
    CHECK(report.kept[0] == "mostly");
    REQUIRE(report.dropped.size() == 1);
    CHECK(report.dropped[0].first == "half");
    CHECK(report.dropped[0].second == doctest::Approx(0.5));
}

TEST_CASE("screen_missing: fully observed always kept; monotone in threshold") {
    std::string csv = "firm,period,output,labor,capital,full,v80,v60\n";
    for (int i = 0; i < 100; ++i) {
        csv += "F" + std::to_string(i) + ",1,1,1,1,3.5," + (i < 80 ? "1.0" : "") + "," +
               (i < 60 ? "1.0" : "") + "\n";
    }
    const FirmPanel panel = panel_from_csv(csv, PanelSchema{});
    std::size_t previous = panel.variable_catalog.size() + 1;
    for (const double threshold : {0.1, 0.3, 0.5, 0.61, 0.7, 0.81, 0.9, 1.0}) {
        const ScreeningReport report = screen_missing(panel, threshold);
        CHECK(std::find(report.kept.begin(), report.kept.end(), "full") != report.kept.end());
        CHECK(report.kept.size() <= previous);  // raising threshold never adds variables
        previous = report.kept.size();
    }
}

TEST_CASE("standardize: symmetric triple and idempotence") {
    Matrix m(3, 1);
    m << 1, 2, 3;
    const auto [z, params] = standardize(m);
    CHECK(z(0, 0) == doctest::Approx(-1.0));
    CHECK(z(1, 0) == doctest::Approx(0.0));
    CHECK(z(2, 0) == doctest::Approx(1.0));
    CHECK(params.means[0] == doctest::Approx(2.0));
    CHECK(params.sds[0] == doctest::Approx(1.0));

    const auto [z2, params2] = standardize(z);
    for (int i = 0; i < 3; ++i) CHECK(z2(i, 0) == doctest::Approx(z(i, 0)).epsilon(1e-12));
}

TEST_CASE("standardize: constant column rejected") {
    Matrix m(3, 1);
    m << 5, 5, 5;
    CHECK_THROWS_AS(standardize(m), ConstantColumn);
}

TEST_CASE("standardize then unstandardize is the identity") {
    Rng rng(5);
    Matrix m(40, 3);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal(j * 3.0, 1.0 + j);
    }
    m(3, 1) = kMissing;
    const auto [z, params] = standardize(m);
    const Matrix back = unstandardize(z, params);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (is_missing(m(i, j))) {
                CHECK(is_missing(back(i, j)));
            } else {
                CHECK(back(i, j) == doctest::Approx(m(i, j)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("descriptive_stats: 1..100 and the paper column order") {
    std::string csv = "firm,period,output,labor,capital,v\n";
    for (int i = 1; i <= 100; ++i) {
        csv += "F" + std::to_string(i) + ",1,1,1,1," + std::to_string(i) + "\n";
    }
    const FirmPanel panel = panel_from_csv(csv, PanelSchema{});
    const auto rows = descriptive_stats(panel, {"v"});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 100);
    CHECK(rows[0].mean == doctest::Approx(50.5));
    CHECK(rows[0].pctl85 == doctest::Approx(85.15));
    CHECK(rows[0].max == doctest::Approx(100.0));
    // sample sd of 1..100: sqrt(sum (i - 50.5)^2 / 99)
    double ss = 0.0;
    for (int i = 1; i <= 100; ++i) ss += (i - 50.5) * (i - 50.5);
    CHECK(rows[0].sd == doctest::Approx(std::sqrt(ss / 99.0)).epsilon(1e-12));
}

TEST_CASE("descriptive_stats: single value has missing sd") {
    const std::string csv = "firm,period,output,labor,capital,v\nF1,1,1,1,1,7\n";
    const auto rows = descriptive_stats(panel_from_csv(csv, PanelSchema{}), {"v"});
    CHECK(rows[0].n == 1);
    CHECK(rows[0].mean == doctest::Approx(7.0));
    CHECK(rows[0].pctl85 == doctest::Approx(7.0));
    CHECK(rows[0].max == doctest::Approx(7.0));
    CHECK(is_missing(rows[0].sd));
}

TEST_CASE("descriptive_stats: unknown variable and permutation invariance") {
    const FirmPanel panel = panel_from_csv(kBasicCsv, test_schema());
    CHECK_THROWS_AS(descriptive_stats(panel, {"nope"}), UnknownVariable);

    // Row order never affects mean or max: compare against a reversed CSV.
    std::string forward = "firm,period,output,labor,capital,v\n";
    std::string reverse = "firm,period,output,labor,capital,v\n";
    std::vector<std::string> lines;
    Rng rng(9);
    for (int i = 0; i < 25; ++i) {
        lines.push_back("F" + std::to_string(i) + ",1,1,1,1," +
                        std::to_string(rng.normal(0, 4)) + "\n");
    }
    for (const auto& l : lines) forward += l;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) reverse += *it;
    const auto a = descriptive_stats(panel_from_csv(forward, PanelSchema{}), {"v"});
    const auto b = descriptive_stats(panel_from_csv(reverse, PanelSchema{}), {"v"});
    CHECK(a[0].mean == doctest::Approx(b[0].mean).epsilon(1e-12));
    CHECK(a[0].max == doctest::Approx(b[0].max));
}

TEST_CASE("average_periods: collapses the window per firm") {
    const FirmPanel panel = panel_from_csv(kBasicCsv, test_schema());
    const FirmPanel cross = average_periods(panel, 2019, 2020);
    REQUIRE(cross.n() == 2);
    CHECK(*cross.observations[0].output == doctest::Approx(105.0));  // (100 + 110) / 2
    CHECK(cross.observations[0].accounting.at("sales") == doctest::Approx(205.0));
    // F2 intermediates observed once -> average over the observed values
    CHECK(*cross.observations[1].intermediates == doctest::Approx(18.0));
}
