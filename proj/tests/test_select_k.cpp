#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"

using namespace errtax;
using clustering::GapStat;
using clustering::Vectors;

namespace {

Vectors blobs(const Vectors& centers, std::size_t per_blob, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Vectors out;
    for (const auto& c : centers) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            clustering::Vector p(c.size());
            for (std::size_t d = 0; d < c.size(); ++d) p[d] = c[d] + noise(rng);
            out.push_back(std::move(p));
        }
    }
    return out;
}

GapStat stat(double gap, double se) {
    GapStat s;
    s.gap = gap;
    s.se = se;
    return s;
}

clustering::KmeansConfig raw_config() {
    clustering::KmeansConfig cfg;
    cfg.normalize_inputs = false;
    cfg.n_init = 5;
    return cfg;
}

}  // namespace

TEST_CASE("one-se rule takes the first k that covers its successor") {
    std::map<int, GapStat> gaps = {{1, stat(0.1, 0.05)},
                                   {2, stat(0.3, 0.05)},
                                   {3, stat(0.6, 0.05)},
                                   {4, stat(1.0, 0.05)},
                                   {5, stat(1.01, 0.05)}};
    bool fallback = true;
    CHECK(clustering::select_k_one_se(gaps, &fallback) == 4);
    CHECK_FALSE(fallback);
}

TEST_CASE("one-se rule falls back to the largest gap when nothing fires") {
    std::map<int, GapStat> gaps = {{1, stat(0.1, 0.0)}, {2, stat(0.2, 0.0)}, {3, stat(0.4, 0.0)}};
    bool fallback = false;
    CHECK(clustering::select_k_one_se(gaps, &fallback) == 3);
    CHECK(fallback);
}

TEST_CASE("one-se rule only compares contiguous successors") {
    // k=1 has no k=2 entry and k=3 has no k=4, so the rule never fires even
    // though the gaps would satisfy it.
    std::map<int, GapStat> gaps = {{1, stat(5.0, 0.1)}, {3, stat(1.0, 0.1)}};
    bool fallback = false;
    CHECK(clustering::select_k_one_se(gaps, &fallback) == 1);
    CHECK(fallback);

    CHECK_THROWS_AS(clustering::select_k_one_se({}, nullptr), Error);
}

TEST_CASE("gap statistic validates its inputs") {
    Vectors pts = blobs({{0, 0}, {10, 10}}, 5, 0.3, 1);
    CHECK_THROWS_AS(clustering::gap_statistic(pts, 1, 3, 1, 0, raw_config()), Error);
    CHECK_THROWS_AS(clustering::gap_statistic(pts, 0, 3, 4, 0, raw_config()), Error);
    CHECK_THROWS_AS(clustering::gap_statistic(pts, 3, 2, 4, 0, raw_config()), Error);
    CHECK_THROWS_AS(clustering::gap_statistic(pts, 1, 11, 4, 0, raw_config()), Error);
    CHECK_THROWS_AS(clustering::gap_statistic({}, 1, 2, 4, 0, raw_config()), Error);

    // All points identical: the uniform reference box has zero volume.
    Vectors flat(6, clustering::Vector{2.0, 2.0});
    CHECK_THROWS_AS(clustering::gap_statistic(flat, 1, 2, 4, 0, raw_config()), Error);
}

TEST_CASE("gap statistic is deterministic and self-consistent") {
    Vectors pts = blobs({{0, 0}, {8, 0}, {4, 7}}, 15, 0.5, 3);
    auto a = clustering::gap_statistic(pts, 1, 5, 10, 42, raw_config());
    auto b = clustering::gap_statistic(pts, 1, 5, 10, 42, raw_config());
    REQUIRE(a.size() == 5);

    for (const auto& [k, s] : a) {
        CAPTURE(k);
        const auto& other = b.at(k);
        CHECK(s.gap == other.gap);
        CHECK(s.se == other.se);
        CHECK(s.data_log_wcss == other.data_log_wcss);
        CHECK(s.ref_log_wcss == other.ref_log_wcss);

        // The published numbers must be re-derivable from the ingredients:
        // gap is the mean reference log-WCSS minus the data log-WCSS, and the
        // error uses the sample standard deviation inflated by sqrt(1 + 1/B).
        REQUIRE(s.ref_log_wcss.size() == 10);
        double mean = 0.0;
        for (double v : s.ref_log_wcss) mean += v;
        mean /= 10.0;
        double var = 0.0;
        for (double v : s.ref_log_wcss) var += (v - mean) * (v - mean);
        var /= 9.0;
        CHECK(s.gap == doctest::Approx(mean - s.data_log_wcss).epsilon(1e-12));
        CHECK(s.se == doctest::Approx(std::sqrt(var) * std::sqrt(1.1)).epsilon(1e-12));
        CHECK(s.se >= 0.0);
    }
}

TEST_CASE("one-se rule on the gap curve finds three blobs") {
    Vectors pts = blobs({{0, 0}, {10, 0}, {5, 8}}, 30, 0.5, 7);
    auto gaps = clustering::gap_statistic(pts, 1, 6, 20, 11, raw_config());
    bool fallback = false;
    CHECK(clustering::select_k_one_se(gaps, &fallback) == 3);
    CHECK_FALSE(fallback);
}

TEST_CASE("select_k recovers five blobs and reports them stable") {
    Vectors pts = blobs({{0, 0}, {20, 0}, {0, 20}, {20, 20}, {10, 10}}, 20, 0.5, 13);
    clustering::SelectKConfig cfg;
    cfg.k_min = 2;
    cfg.k_max = 10;
    cfg.gap_references = 8;
    cfg.kmeans = raw_config();
    auto report = clustering::select_k(pts, 19, cfg);

    CHECK(report.final_k == 5);
    CHECK(report.stable);
    CHECK(report.wcss_curve.size() == 9);
    CHECK(report.elbow_candidate_range.first >= 2);
    CHECK(report.elbow_candidate_range.second <= 10);
    CHECK(report.gap_values.count(report.gap_choice) == 1);
    CHECK(report.dbi_values.count(report.final_k) == 1);
    REQUIRE(report.stability_runs.size() == 10);
    int agree = 0;
    for (int k : report.stability_runs)
        if (k == report.final_k) ++agree;
    CHECK(agree >= 6);
}

TEST_CASE("select_k handles data with only two distinct locations") {
    Vectors pts;
    for (int i = 0; i < 30; ++i) pts.push_back({1.0, 0.0});
    for (int i = 0; i < 30; ++i) pts.push_back({0.0, 1.0});

    clustering::SelectKConfig cfg;
    cfg.k_min = 1;
    cfg.k_max = 6;
    cfg.gap_references = 8;
    auto report = clustering::select_k(pts, 5, cfg);

    // Splitting beyond the two locations leaves empty clusters, which the
    // refinement stage disqualifies; the two-cluster solution wins with a
    // Davies-Bouldin index of exactly zero.
    CHECK(report.final_k == 2);
    CHECK(report.stable);
    CHECK(report.dbi_values.at(2) == 0.0);
    CHECK_FALSE(report.gap_fallback);
}

TEST_CASE("select_k validates its inputs") {
    CHECK_THROWS_AS(clustering::select_k({}, 0, {}), Error);

    clustering::SelectKConfig cfg;
    cfg.k_min = 5;
    Vectors three = blobs({{0, 0}}, 3, 0.1, 2);
    CHECK_THROWS_AS(clustering::select_k(three, 0, cfg), Error);
}
