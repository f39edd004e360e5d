#include <algorithm>
#include <cmath>
#include <limits>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

namespace errtax::clustering {

namespace {

// Sub-seed streams so the curve, the reference draws, the refinement stage,
// and each stability rerun consume independent deterministic randomness.
constexpr std::uint64_t kCurveStream = 0xC0;
constexpr std::uint64_t kGapDataStream = 0xDA;
constexpr std::uint64_t kGapRefStream = 0x9E;
constexpr std::uint64_t kDbiStream = 0xDB;
constexpr std::uint64_t kStabilityStream = 0x57;

struct BoundingBox {
    Vector lo;
    Vector hi;
};

BoundingBox bounding_box(const Vectors& vectors) {
    const std::size_t dim = vectors.front().size();
    BoundingBox box{Vector(dim, 0.0), Vector(dim, 0.0)};
    box.lo = box.hi = vectors.front();
    for (const auto& v : vectors) {
        for (std::size_t d = 0; d < dim; ++d) {
            box.lo[d] = std::min(box.lo[d], v[d]);
            box.hi[d] = std::max(box.hi[d], v[d]);
        }
    }
    bool degenerate = true;
    for (std::size_t d = 0; d < dim; ++d) {
        if (box.hi[d] > box.lo[d]) {
            degenerate = false;
            break;
        }
    }
    if (degenerate) {
        throw Error("gap statistic undefined: data bounding box has zero volume in every dimension");
    }
    return box;
}

Vectors draw_reference(const BoundingBox& box, std::size_t n, std::uint64_t seed) {
    auto engine = rng::make_engine(seed);
    const std::size_t dim = box.lo.size();
    Vectors out(n, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            out[i][d] = rng::uniform_range(engine, box.lo[d], box.hi[d]);
        }
    }
    return out;
}

double log_wcss_of_kmeans(const Vectors& vectors, int k, std::uint64_t seed,
                          const KmeansConfig& config) {
    ClusterModel model = kmeans(vectors, k, seed, config);
    return std::log(wcss(model, vectors));
}

}  // namespace

std::map<int, GapStat> gap_statistic(const Vectors& input, int k_lo, int k_hi, int B,
                                     std::uint64_t seed, const KmeansConfig& config) {
    if (B < 2) throw Error("gap statistic needs at least 2 reference datasets");
    if (input.empty()) throw Error("gap statistic needs data");
    if (k_lo < 1 || k_hi < k_lo) throw Error("invalid k range");
    if (static_cast<std::size_t>(k_hi) > input.size()) throw Error("k range exceeds point count");

    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;
    KmeansConfig inner = config;
    inner.normalize_inputs = false;

    // The same B reference datasets serve every k.
    BoundingBox box = bounding_box(vectors);
    std::uint64_t ref_seed = rng::derive_seed(seed, kGapRefStream);
    std::vector<Vectors> references;
    references.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        references.push_back(
            draw_reference(box, vectors.size(), rng::derive_seed(ref_seed, static_cast<std::uint64_t>(b))));
    }

    std::uint64_t data_seed = rng::derive_seed(seed, kGapDataStream);
    std::map<int, GapStat> out;
    for (int k = k_lo; k <= k_hi; ++k) {
        GapStat stat;
        stat.data_log_wcss = log_wcss_of_kmeans(
            vectors, k, rng::derive_seed(data_seed, static_cast<std::uint64_t>(k)), inner);

        stat.ref_log_wcss.assign(static_cast<std::size_t>(B), 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int b = 0; b < B; ++b) {
            std::uint64_t run_seed = rng::derive_seed(
                ref_seed, (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(b));
            stat.ref_log_wcss[static_cast<std::size_t>(b)] =
                log_wcss_of_kmeans(references[static_cast<std::size_t>(b)], k, run_seed, inner);
        }

        double mean = 0.0;
        for (double v : stat.ref_log_wcss) mean += v;
        mean /= static_cast<double>(B);
        double var = 0.0;
        for (double v : stat.ref_log_wcss) var += (v - mean) * (v - mean);
        var /= static_cast<double>(B - 1);  // sample variance

        stat.gap = mean - stat.data_log_wcss;
        stat.se = std::sqrt(var) * std::sqrt(1.0 + 1.0 / static_cast<double>(B));
        out[k] = std::move(stat);
    }
    return out;
}

int select_k_one_se(const std::map<int, GapStat>& gap_map, bool* fallback) {
    if (gap_map.empty()) throw Error("empty gap map");
    if (fallback) *fallback = false;
    for (auto it = gap_map.begin(); it != gap_map.end(); ++it) {
        auto next = std::next(it);
        if (next == gap_map.end() || next->first != it->first + 1) continue;
        if (it->second.gap >= next->second.gap - next->second.se) return it->first;
    }
    // No k satisfied the rule; take the largest gap.
    if (fallback) *fallback = true;
    int best_k = gap_map.begin()->first;
    double best_gap = gap_map.begin()->second.gap;
    for (const auto& [k, stat] : gap_map) {
        if (stat.gap > best_gap) {
            best_gap = stat.gap;
            best_k = k;
        }
    }
    return best_k;
}

std::pair<int, int> detect_elbow(const std::map<int, double>& wcss_curve) {
    if (wcss_curve.size() < 3) {
        int lo = wcss_curve.begin()->first;
        int hi = wcss_curve.rbegin()->first;
        return {lo, hi};
    }
    const int k_min = wcss_curve.begin()->first;
    const int k_max = wcss_curve.rbegin()->first;

    // Largest discrete second difference over interior ks; ties take the
    // smallest k.
    int best_k = k_min + 1;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = k_min + 1; k <= k_max - 1; ++k) {
        auto prev = wcss_curve.find(k - 1);
        auto cur = wcss_curve.find(k);
        auto next = wcss_curve.find(k + 1);
        if (prev == wcss_curve.end() || cur == wcss_curve.end() || next == wcss_curve.end()) {
            throw Error("WCSS curve must cover a contiguous k range");
        }
        double second_diff = prev->second - 2.0 * cur->second + next->second;
        if (second_diff > best) {
            best = second_diff;
            best_k = k;
        }
    }
    return {std::max(k_min, best_k - 5), std::min(k_max, best_k + 5)};
}

KSelectionReport select_k(const Vectors& input, std::uint64_t seed, const SelectKConfig& config) {
    if (input.empty()) throw Error("cannot select k for an empty vector set");
    const Vectors vectors =
        config.kmeans.normalize_inputs ? normalized_rows(input) : input;
    KmeansConfig inner = config.kmeans;
    inner.normalize_inputs = false;

    KSelectionReport report;
    const int k_min = std::max(1, config.k_min);
    const int k_max = std::min<int>(config.k_max, static_cast<int>(vectors.size()));
    if (k_max < k_min) throw Error("not enough points for the configured k range");

    // Stage 1: WCSS curve and elbow interval.
    std::uint64_t curve_seed = rng::derive_seed(seed, kCurveStream);
    std::vector<double> curve(static_cast<std::size_t>(k_max - k_min + 1), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int k = k_min; k <= k_max; ++k) {
        ClusterModel model =
            kmeans(vectors, k, rng::derive_seed(curve_seed, static_cast<std::uint64_t>(k)), inner);
        curve[static_cast<std::size_t>(k - k_min)] = wcss(model, vectors);
    }
    for (int k = k_min; k <= k_max; ++k) {
        report.wcss_curve[k] = curve[static_cast<std::size_t>(k - k_min)];
    }
    report.elbow_candidate_range = detect_elbow(report.wcss_curve);

    // Stage 2: gap statistic with the one-standard-error rule.
    report.gap_values =
        gap_statistic(vectors, report.elbow_candidate_range.first,
                      report.elbow_candidate_range.second, config.gap_references, seed, inner);
    report.gap_choice = select_k_one_se(report.gap_values, &report.gap_fallback);

    // Stage 3: Davies-Bouldin refinement in a neighborhood of the gap choice.
    const int dbi_lo = std::max({2, k_min, report.gap_choice - config.dbi_neighborhood});
    const int dbi_hi = std::min(k_max, report.gap_choice + config.dbi_neighborhood);
    std::uint64_t dbi_seed = rng::derive_seed(seed, kDbiStream);

    auto dbi_argmin = [&](std::uint64_t stage_seed, std::map<int, double>* values) {
        int best_k = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = dbi_lo; k <= dbi_hi; ++k) {
            ClusterModel model = kmeans(
                vectors, k, rng::derive_seed(stage_seed, static_cast<std::uint64_t>(k)), inner);
            double value;
            try {
                value = davies_bouldin(model, vectors);
            } catch (const Error&) {
                continue;  // degenerate clustering at this k; disqualified
            }
            if (values) (*values)[k] = value;
            if (value < best) {
                best = value;
                best_k = k;
            }
        }
        return best_k;
    };

    report.final_k = dbi_argmin(dbi_seed, &report.dbi_values);
    if (report.final_k == 0) {
        // Every candidate degenerated; fall back to the gap choice.
        report.final_k = report.gap_choice;
        report.stability_runs.assign(static_cast<std::size_t>(config.stability_runs),
                                     report.gap_choice);
        report.stable = false;
        return report;
    }

    // Stability reruns of stage 3 under fresh seeds.
    std::uint64_t stability_seed = rng::derive_seed(seed, kStabilityStream);
    report.stability_runs.assign(static_cast<std::size_t>(config.stability_runs), 0);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.stability_runs; ++r) {
        report.stability_runs[static_cast<std::size_t>(r)] =
            dbi_argmin(rng::derive_seed(stability_seed, static_cast<std::uint64_t>(r)), nullptr);
    }
    int agreement = 0;
    for (int k : report.stability_runs) {
        if (k == report.final_k) ++agreement;
    }
    report.stable = agreement >= config.stability_quorum;
    return report;
}

}  // namespace errtax::clustering
