#include "errtax/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "errtax/errors.hpp"

namespace errtax::reporting {

namespace {

std::string fmt(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

double consistency(const std::vector<std::string>& predictions, int n_categories) {
    if (predictions.empty()) throw Error("consistency needs at least one prediction");
    if (n_categories < 2) throw Error("consistency needs n_categories >= 2");

    std::map<std::string, std::size_t> counts;
    for (const auto& p : predictions) ++counts[p];

    const double n = static_cast<double>(predictions.size());
    double entropy = 0.0;
    for (const auto& [_, count] : counts) {
        double p = static_cast<double>(count) / n;
        entropy -= p * std::log(p);
    }
    entropy /= std::log(static_cast<double>(n_categories));
    double value = 1.0 - entropy;
    // log round-off can push the extremes a hair outside [0,1]
    return std::min(1.0, std::max(0.0, value));
}

double accuracy(const std::vector<std::string>& predictions, const std::string& gold) {
    if (predictions.empty()) throw Error("accuracy needs at least one prediction");
    std::size_t hits = 0;
    for (const auto& p : predictions) {
        if (p == gold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

ConsistencyReport consistency_report(const std::vector<LabeledItem>& items, int n_categories) {
    if (items.empty()) throw Error("consistency report needs at least one item");
    ConsistencyReport report;
    report.n_categories = n_categories;
    report.samples_per_item = static_cast<int>(items.front().predictions.size());

    double acc_sum = 0.0;
    double con_sum = 0.0;
    for (const auto& item : items) {
        ItemConsistency row;
        row.item_id = item.item_id;
        row.predictions = item.predictions;
        row.accuracy = accuracy(item.predictions, item.gold);
        row.consistency = consistency(item.predictions, n_categories);
        acc_sum += row.accuracy;
        con_sum += row.consistency;
        report.per_item.push_back(std::move(row));
    }
    report.aggregate_accuracy = acc_sum / static_cast<double>(items.size());
    report.aggregate_consistency = con_sum / static_cast<double>(items.size());
    return report;
}

std::string format_cell(const DistributionCell& cell) {
    return std::to_string(cell.count) + "[" + fmt(cell.percentage, 2) + "%]";
}

DistributionReport distribution_report(const clustering::ClusterModel& model,
                                       const std::vector<ReasonMeta>& meta) {
    if (meta.size() != model.labels.size()) {
        throw Error("one metadata record per clustered reason required");
    }

    DistributionReport report;
    for (int c = 0; c < model.k; ++c) {
        if (static_cast<std::size_t>(c) < model.taxonomy_labels.size() &&
            !model.taxonomy_labels[static_cast<std::size_t>(c)].empty()) {
            report.category_names.push_back(model.taxonomy_labels[static_cast<std::size_t>(c)]);
        } else {
            report.category_names.push_back("cluster-" + std::to_string(c));
        }
    }
    bool has_noise = std::find(model.labels.begin(), model.labels.end(), clustering::kNoise) !=
                     model.labels.end();
    if (has_noise) report.category_names.push_back("noise");

    std::set<std::string> models;
    for (const auto& m : meta) models.insert(m.source_model);
    report.model_names.assign(models.begin(), models.end());

    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < report.model_names.size(); ++i) row_of[report.model_names[i]] = i;

    report.cells.assign(report.model_names.size(),
                        std::vector<DistributionCell>(report.category_names.size()));
    report.totals.assign(report.model_names.size(), 0);

    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        int label = model.labels[i];
        std::size_t col;
        if (label == clustering::kNoise) {
            col = report.category_names.size() - 1;
        } else if (label >= 0 && label < model.k) {
            col = static_cast<std::size_t>(label);
        } else {
            throw Error("cluster label out of range at reason " + std::to_string(i));
        }
        std::size_t row = row_of.at(meta[i].source_model);
        ++report.cells[row][col].count;
        ++report.totals[row];
    }

    for (std::size_t row = 0; row < report.cells.size(); ++row) {
        for (auto& cell : report.cells[row]) {
            cell.percentage = report.totals[row] > 0
                                  ? 100.0 * static_cast<double>(cell.count) /
                                        static_cast<double>(report.totals[row])
                                  : 0.0;
        }
    }
    return report;
}

std::vector<CategoryComparison> per_error_comparison(const std::vector<PromptOutcome>& baseline,
                                                     const std::vector<PromptOutcome>& eap) {
    std::map<std::string, const PromptOutcome*> base_by_id;
    for (const auto& o : baseline) base_by_id[o.item_id] = &o;
    if (base_by_id.size() != baseline.size()) throw Error("duplicate item ids in baseline results");

    std::map<std::string, const PromptOutcome*> eap_by_id;
    for (const auto& o : eap) eap_by_id[o.item_id] = &o;
    if (eap_by_id.size() != eap.size()) throw Error("duplicate item ids in EAP results");

    if (base_by_id.size() != eap_by_id.size()) {
        throw Error("baseline and EAP results cover different item sets");
    }

    struct Tally {
        long long n = 0;
        long long base_hits = 0;
        long long eap_hits = 0;
    };
    std::map<std::string, Tally> per_category;
    for (const auto& [id, base] : base_by_id) {
        auto it = eap_by_id.find(id);
        if (it == eap_by_id.end()) throw Error("item " + id + " missing from EAP results");
        if (base->category != it->second->category) {
            throw Error("item " + id + " categorized differently across result sets");
        }
        Tally& t = per_category[base->category];
        ++t.n;
        if (base->correct) ++t.base_hits;
        if (it->second->correct) ++t.eap_hits;
    }

    std::vector<CategoryComparison> rows;
    for (const auto& [category, t] : per_category) {
        CategoryComparison row;
        row.category = category;
        row.n_items = t.n;
        row.baseline_accuracy = static_cast<double>(t.base_hits) / static_cast<double>(t.n);
        row.eap_accuracy = static_cast<double>(t.eap_hits) / static_cast<double>(t.n);
        row.delta_points = 100.0 * (row.eap_accuracy - row.baseline_accuracy);
        rows.push_back(std::move(row));
    }
    return rows;  // map iteration already sorts by category
}

std::string to_csv(const DistributionReport& report) {
    std::ostringstream os;
    os << "model";
    for (const auto& c : report.category_names) os << "," << csv_field(c);
    os << ",total\n";
    for (std::size_t row = 0; row < report.model_names.size(); ++row) {
        os << csv_field(report.model_names[row]);
        for (const auto& cell : report.cells[row]) os << "," << csv_field(format_cell(cell));
        os << "," << report.totals[row] << "\n";
    }
    return os.str();
}

std::string to_markdown(const DistributionReport& report) {
    std::ostringstream os;
    os << "| model |";
    for (const auto& c : report.category_names) os << " " << c << " |";
    os << " total |\n|---|";
    for (std::size_t i = 0; i < report.category_names.size(); ++i) os << "---|";
    os << "---|\n";
    for (std::size_t row = 0; row < report.model_names.size(); ++row) {
        os << "| " << report.model_names[row] << " |";
        for (const auto& cell : report.cells[row]) os << " " << format_cell(cell) << " |";
        os << " " << report.totals[row] << " |\n";
    }
    return os.str();
}

std::string to_csv(const ConsistencyReport& report) {
    std::ostringstream os;
    os << "item_id,accuracy,consistency,predictions\n";
    for (const auto& item : report.per_item) {
        std::string joined;
        for (std::size_t i = 0; i < item.predictions.size(); ++i) {
            if (i) joined += ";";
            joined += item.predictions[i];
        }
        os << csv_field(item.item_id) << "," << fmt(item.accuracy, 4) << ","
           << fmt(item.consistency, 4) << "," << csv_field(joined) << "\n";
    }
    os << "aggregate," << fmt(report.aggregate_accuracy, 4) << ","
       << fmt(report.aggregate_consistency, 4) << ",\n";
    return os.str();
}

std::string to_markdown(const ConsistencyReport& report) {
    std::ostringstream os;
    os << "| item | accuracy | consistency |\n|---|---|---|\n";
    for (const auto& item : report.per_item) {
        os << "| " << item.item_id << " | " << fmt(item.accuracy, 4) << " | "
           << fmt(item.consistency, 4) << " |\n";
    }
    os << "| **aggregate** | " << fmt(report.aggregate_accuracy, 4) << " | "
       << fmt(report.aggregate_consistency, 4) << " |\n";
    return os.str();
}

std::string to_csv(const std::vector<CategoryComparison>& rows) {
    std::ostringstream os;
    os << "category,n_items,baseline_accuracy,eap_accuracy,delta_points\n";
    for (const auto& row : rows) {
        os << csv_field(row.category) << "," << row.n_items << ","
           << fmt(row.baseline_accuracy, 4) << "," << fmt(row.eap_accuracy, 4) << ","
           << fmt(row.delta_points, 2) << "\n";
    }
    return os.str();
}

std::string to_markdown(const std::vector<CategoryComparison>& rows) {
    std::ostringstream os;
    os << "| category | n | baseline | EAP | delta (pts) |\n|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        os << "| " << row.category << " | " << row.n_items << " | "
           << fmt(row.baseline_accuracy, 4) << " | " << fmt(row.eap_accuracy, 4) << " | "
           << fmt(row.delta_points, 2) << " |\n";
    }
    return os.str();
}

std::string to_svg(const DistributionReport& report) {
    // One stacked horizontal bar per model, segment width = percentage.
    static const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                                     "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};
    const int bar_height = 24;
    const int gap = 12;
    const int label_width = 160;
    const int bar_width = 600;
    const int height = static_cast<int>(report.model_names.size()) * (bar_height + gap) + gap;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (label_width + bar_width + 20)
       << "\" height=\"" << height << "\">\n";
    for (std::size_t row = 0; row < report.model_names.size(); ++row) {
        int y = gap + static_cast<int>(row) * (bar_height + gap);
        os << "  <text x=\"4\" y=\"" << (y + bar_height - 7) << "\" font-size=\"12\">"
           << report.model_names[row] << "</text>\n";
        double x = label_width;
        for (std::size_t col = 0; col < report.cells[row].size(); ++col) {
            double w = bar_width * report.cells[row][col].percentage / 100.0;
            if (w <= 0.0) continue;
            os << "  <rect x=\"" << fmt(x, 2) << "\" y=\"" << y << "\" width=\"" << fmt(w, 2)
               << "\" height=\"" << bar_height << "\" fill=\""
               << kPalette[col % (sizeof(kPalette) / sizeof(kPalette[0]))] << "\"><title>"
               << report.category_names[col] << ": " << format_cell(report.cells[row][col])
               << "</title></rect>\n";
            x += w;
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace errtax::reporting
