#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/reporting.hpp"

using namespace errtax;

namespace {

clustering::ClusterModel small_model(int k, std::vector<int> labels,
                                     std::vector<std::string> taxonomy = {}) {
    clustering::ClusterModel model;
    model.k = k;
    model.labels = std::move(labels);
    model.taxonomy_labels = std::move(taxonomy);
    return model;
}

}  // namespace

TEST_CASE("consistency is one for unanimous predictions and zero for uniform ones") {
    CHECK(reporting::consistency({"CA", "CA", "CA"}, 9) == 1.0);

    std::vector<std::string> uniform = {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"};
    CHECK(reporting::consistency(uniform, 9) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("consistency of an even two-way split matches the closed form") {
    std::vector<std::string> split = {"CA", "CA", "CA", "CA", "CA",
                                      "MS", "MS", "MS", "MS", "MS"};
    double expected = 1.0 - std::log(2.0) / std::log(9.0);
    CHECK(reporting::consistency(split, 9) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("consistency clamps when predictions outnumber the category space") {
    // Four distinct predictions against a 2-category space push the
    // normalized entropy past 1; the result clamps at 0.
    CHECK(reporting::consistency({"a", "b", "c", "d"}, 2) == 0.0);
}

TEST_CASE("consistency validates its inputs") {
    CHECK_THROWS_AS(reporting::consistency({}, 9), Error);
    CHECK_THROWS_AS(reporting::consistency({"a"}, 1), Error);
}

TEST_CASE("accuracy counts exact matches") {
    CHECK(reporting::accuracy({"x", "y", "x", "x"}, "x") == doctest::Approx(0.75));
    CHECK_THROWS_AS(reporting::accuracy({}, "x"), Error);
}

TEST_CASE("consistency_report averages the per-item rows") {
    std::vector<reporting::LabeledItem> items = {
        {"i1", {"CA", "CA", "CA", "CA"}, "CA"},
        {"i2", {"CA", "MS", "CA", "MS"}, "MS"},
    };
    auto report = reporting::consistency_report(items, 9);
    REQUIRE(report.per_item.size() == 2);
    CHECK(report.per_item[0].accuracy == 1.0);
    CHECK(report.per_item[0].consistency == 1.0);
    CHECK(report.per_item[1].accuracy == 0.5);
    double split = 1.0 - std::log(2.0) / std::log(9.0);
    CHECK(report.per_item[1].consistency == doctest::Approx(split).epsilon(1e-9));
    CHECK(report.aggregate_accuracy == doctest::Approx(0.75));
    CHECK(report.aggregate_consistency == doctest::Approx((1.0 + split) / 2.0).epsilon(1e-9));
    CHECK(report.samples_per_item == 4);

    CHECK_THROWS_AS(reporting::consistency_report({}, 9), Error);
}

TEST_CASE("format_cell renders count and two-decimal percentage") {
    CHECK(reporting::format_cell({1699, 4.8286}) == "1699[4.83%]");
    CHECK(reporting::format_cell({0, 0.0}) == "0[0.00%]");
    CHECK(reporting::format_cell({3, 100.0}) == "3[100.00%]");
}

TEST_CASE("distribution_report tallies per model and per cluster") {
    auto model = small_model(3, {0, 0, 1, 2, 1, 0}, {"unit slips", "", "sign flips"});
    std::vector<reporting::ReasonMeta> meta = {
        {"model-b", "ds"}, {"model-a", "ds"}, {"model-a", "ds"},
        {"model-a", "ds"}, {"model-b", "ds"}, {"model-b", "ds"},
    };
    auto report = reporting::distribution_report(model, meta);

    // Named clusters keep their label; unnamed ones fall back to an index.
    CHECK(report.category_names ==
          std::vector<std::string>{"unit slips", "cluster-1", "sign flips"});
    // Rows are sorted model names.
    CHECK(report.model_names == std::vector<std::string>{"model-a", "model-b"});

    CHECK(report.totals == std::vector<long long>{3, 3});
    CHECK(report.cells[0][0].count == 1);  // model-a in cluster 0
    CHECK(report.cells[0][1].count == 1);
    CHECK(report.cells[0][2].count == 1);
    CHECK(report.cells[1][0].count == 2);  // model-b in cluster 0
    CHECK(report.cells[1][1].count == 1);
    CHECK(report.cells[1][2].count == 0);

    double sum = 0.0;
    for (const auto& cell : report.cells[1]) sum += cell.percentage;
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(report.cells[1][0].percentage == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("distribution_report appends a noise column when noise labels exist") {
    auto model = small_model(2, {0, 1, clustering::kNoise, 0});
    std::vector<reporting::ReasonMeta> meta(4, {"m", "ds"});
    auto report = reporting::distribution_report(model, meta);
    CHECK(report.category_names == std::vector<std::string>{"cluster-0", "cluster-1", "noise"});
    CHECK(report.cells[0][2].count == 1);
    CHECK(report.totals[0] == 4);
}

TEST_CASE("distribution_report requires aligned metadata and valid labels") {
    auto model = small_model(2, {0, 1});
    CHECK_THROWS_AS(reporting::distribution_report(model, {}), Error);

    auto bad = small_model(2, {0, 5});
    std::vector<reporting::ReasonMeta> meta(2, {"m", "ds"});
    CHECK_THROWS_AS(reporting::distribution_report(bad, meta), Error);
}

TEST_CASE("per_error_comparison aggregates matching items by category") {
    std::vector<reporting::PromptOutcome> base = {
        {"i1", "beta", false}, {"i2", "beta", false}, {"i3", "alpha", true}, {"i4", "alpha", false},
    };
    std::vector<reporting::PromptOutcome> eap = {
        {"i3", "alpha", true}, {"i1", "beta", true}, {"i2", "beta", false}, {"i4", "alpha", true},
    };
    auto rows = reporting::per_error_comparison(base, eap);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].category == "alpha");  // sorted by category
    CHECK(rows[0].n_items == 2);
    CHECK(rows[0].baseline_accuracy == doctest::Approx(0.5));
    CHECK(rows[0].eap_accuracy == doctest::Approx(1.0));
    CHECK(rows[0].delta_points == doctest::Approx(50.0));
    CHECK(rows[1].category == "beta");
    CHECK(rows[1].delta_points == doctest::Approx(50.0));
}

TEST_CASE("per_error_comparison rejects mismatched result sets") {
    std::vector<reporting::PromptOutcome> base = {{"i1", "a", true}, {"i2", "a", false}};

    std::vector<reporting::PromptOutcome> dup = {{"i1", "a", true}, {"i1", "a", false}};
    CHECK_THROWS_AS(reporting::per_error_comparison(dup, base), Error);
    CHECK_THROWS_AS(reporting::per_error_comparison(base, dup), Error);

    std::vector<reporting::PromptOutcome> fewer = {{"i1", "a", true}};
    CHECK_THROWS_AS(reporting::per_error_comparison(base, fewer), Error);

    std::vector<reporting::PromptOutcome> other_ids = {{"i1", "a", true}, {"i9", "a", false}};
    CHECK_THROWS_AS(reporting::per_error_comparison(base, other_ids), Error);

    std::vector<reporting::PromptOutcome> recategorized = {{"i1", "a", true}, {"i2", "b", false}};
    CHECK_THROWS_AS(reporting::per_error_comparison(base, recategorized), Error);
}

TEST_CASE("distribution csv quotes fields containing commas") {
    auto model = small_model(2, {0, 1}, {"slips, misreads", "other"});
    std::vector<reporting::ReasonMeta> meta(2, {"m", "ds"});
    auto csv = reporting::to_csv(reporting::distribution_report(model, meta));
    CHECK(csv.rfind("model,", 0) == 0);
    CHECK(csv.find("\"slips, misreads\"") != std::string::npos);
    CHECK(csv.find(",total\n") != std::string::npos);
    CHECK(csv.find("1[50.00%]") != std::string::npos);
}

TEST_CASE("consistency csv carries per-item rows plus an aggregate row") {
    std::vector<reporting::LabeledItem> items = {{"i1", {"CA", "CA"}, "CA"}};
    auto csv = reporting::to_csv(reporting::consistency_report(items, 9));
    CHECK(csv.rfind("item_id,accuracy,consistency,predictions\n", 0) == 0);
    CHECK(csv.find("i1,1.0000,1.0000,CA;CA\n") != std::string::npos);
    CHECK(csv.find("aggregate,1.0000,1.0000,\n") != std::string::npos);
}

TEST_CASE("comparison csv uses the pinned header and decimal widths") {
    std::vector<reporting::CategoryComparison> rows(1);
    rows[0].category = "alpha";
    rows[0].n_items = 4;
    rows[0].baseline_accuracy = 0.25;
    rows[0].eap_accuracy = 0.5;
    rows[0].delta_points = 25.0;
    auto csv = reporting::to_csv(rows);
    CHECK(csv == "category,n_items,baseline_accuracy,eap_accuracy,delta_points\n"
                 "alpha,4,0.2500,0.5000,25.00\n");
}

TEST_CASE("markdown tables have one separator row and aligned columns") {
    auto model = small_model(2, {0, 1}, {"a", "b"});
    std::vector<reporting::ReasonMeta> meta(2, {"m", "ds"});
    auto md = reporting::to_markdown(reporting::distribution_report(model, meta));
    CHECK(md.rfind("| model | a | b | total |\n|---|---|---|---|\n", 0) == 0);
    CHECK(md.find("| m | 1[50.00%] | 1[50.00%] | 2 |\n") != std::string::npos);
}

TEST_CASE("svg renders one titled rect per nonempty cell") {
    auto model = small_model(2, {0, 0, 1}, {"first", "second"});
    std::vector<reporting::ReasonMeta> meta = {{"m1", "ds"}, {"m2", "ds"}, {"m2", "ds"}};
    auto svg = reporting::to_svg(reporting::distribution_report(model, meta));
    CHECK(svg.rfind("<svg xmlns=", 0) == 0);
    CHECK(svg.find("<title>first: 1[100.00%]</title>") != std::string::npos);
    CHECK(svg.find("<title>second: 1[50.00%]</title>") != std::string::npos);
    // m1 has nothing in cluster "second": zero-width segments are dropped.
    CHECK(svg.find("<title>second: 0[0.00%]</title>") == std::string::npos);
}
