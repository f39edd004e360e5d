#pragma once

// Evaluation reports: repeated-classification consistency (1 - normalized
// entropy), accuracy, per-model error-distribution tables in the
// "count[pct%]" cell format, and the per-category comparison between a
// baseline prompt and the error-aware one.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errtax/clustering.hpp"

namespace errtax::reporting {

inline constexpr int kStaticCategoryCount = 9;
inline constexpr int kDefaultSamplesPerItem = 10;

// 1 - H(predictions) with the entropy taken base n_categories, so the
// result lands in [0,1]: 1.0 when all predictions agree, 0.0 when they are
// uniform over all categories.
double consistency(const std::vector<std::string>& predictions, int n_categories);

// Fraction of predictions equal to gold.
double accuracy(const std::vector<std::string>& predictions, const std::string& gold);

struct ItemConsistency {
    std::string item_id;
    std::vector<std::string> predictions;
    double accuracy = 0.0;
    double consistency = 0.0;
};

struct ConsistencyReport {
    std::vector<ItemConsistency> per_item;
    double aggregate_accuracy = 0.0;
    double aggregate_consistency = 0.0;
    int samples_per_item = kDefaultSamplesPerItem;
    int n_categories = kStaticCategoryCount;
};

struct LabeledItem {
    std::string item_id;
    std::vector<std::string> predictions;
    std::string gold;
};

ConsistencyReport consistency_report(const std::vector<LabeledItem>& items, int n_categories);

// Where each embedded reason came from; aligned with ClusterModel.labels.
struct ReasonMeta {
    std::string source_model;
    std::string source_dataset;
};

struct DistributionCell {
    long long count = 0;
    double percentage = 0.0;  // of the row model's total
};

struct DistributionReport {
    std::vector<std::string> category_names;          // column order
    std::vector<std::string> model_names;             // row order
    std::vector<std::vector<DistributionCell>> cells; // [model][category]
    std::vector<long long> totals;          // per model
};

// Renders one cell as "count[pct%]" with two decimals, e.g. "1699[4.83%]".
std::string format_cell(const DistributionCell& cell);

// Counts reasons per (source model, cluster) and expresses each count as a
// percentage of that model's total. meta[i] describes the reason behind
// model.labels[i]; DBSCAN noise is reported under its own "noise" column.
DistributionReport distribution_report(const clustering::ClusterModel& model,
                                       const std::vector<ReasonMeta>& meta);

struct PromptOutcome {
    std::string item_id;
    std::string category;
    bool correct = false;
};

struct CategoryComparison {
    std::string category;
    double baseline_accuracy = 0.0;
    double eap_accuracy = 0.0;
    double delta_points = 0.0;  // percentage points
    long long n_items = 0;
};

// Per-category accuracy of both prompting styles over the same items,
// sorted by category; the two result sets must cover identical item ids.
std::vector<CategoryComparison> per_error_comparison(const std::vector<PromptOutcome>& baseline,
                                                     const std::vector<PromptOutcome>& eap);

// Table renderers shared by every report.
std::string to_csv(const DistributionReport& report);
std::string to_markdown(const DistributionReport& report);
std::string to_csv(const ConsistencyReport& report);
std::string to_markdown(const ConsistencyReport& report);
std::string to_csv(const std::vector<CategoryComparison>& rows);
std::string to_markdown(const std::vector<CategoryComparison>& rows);

// Static stacked-bar chart of the distribution, one bar per model.
std::string to_svg(const DistributionReport& report);

}  // namespace errtax::reporting
