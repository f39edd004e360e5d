#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cluster_oracle.hpp"
#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "test_support.hpp"

using namespace errtax;
using clustering::Vectors;

namespace {

Vectors random_points(std::size_t n, std::size_t d, std::uint64_t seed, double spread = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, spread);
    Vectors out(n, clustering::Vector(d));
    for (auto& row : out)
        for (auto& x : row) x = dist(rng);
    return out;
}

Vectors two_blobs(std::size_t per_blob, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.05);
    Vectors out;
    for (std::size_t i = 0; i < per_blob; ++i)
        out.push_back({10.0 + jitter(rng), 0.0 + jitter(rng)});
    for (std::size_t i = 0; i < per_blob; ++i)
        out.push_back({0.0 + jitter(rng), 10.0 + jitter(rng)});
    return out;
}

}  // namespace

TEST_CASE("cosine similarity matches hand-computed values") {
    CHECK(clustering::cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(clustering::cosine_similarity({1, 2}, {2, 4}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(clustering::cosine_similarity({1, 2, 3}, {4, 5, 6}) ==
          doctest::Approx(0.9746318461970762).epsilon(1e-6));
    CHECK(clustering::cosine_similarity({1, 0}, {-1, 0}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("cosine similarity rejects zero vectors and length mismatches") {
    CHECK_THROWS_AS(clustering::cosine_similarity({0, 0}, {1, 2}), Error);
    CHECK_THROWS_AS(clustering::cosine_similarity({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("cosine similarity is invariant under positive scaling") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist;
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 20; ++trial) {
        clustering::Vector u(5), v(5);
        for (auto& x : u) x = dist(rng);
        for (auto& x : v) x = dist(rng);
        double base = clustering::cosine_similarity(u, v);
        auto su = u;
        auto sv = v;
        double a = scale(rng), b = scale(rng);
        for (auto& x : su) x *= a;
        for (auto& x : sv) x *= b;
        CHECK(clustering::cosine_similarity(su, sv) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("normalized_rows produces unit rows and passes zero rows through") {
    Vectors rows = {{3, 4}, {0, 0}, {0.001, 0}};
    auto out = clustering::normalized_rows(rows);
    CHECK(out[0][0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out[0][1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out[1] == clustering::Vector{0, 0});
    double norm = std::sqrt(out[2][0] * out[2][0] + out[2][1] * out[2][1]);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kmeans validates its inputs") {
    Vectors three = {{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(clustering::kmeans(three, 5, 0), Error);
    CHECK_THROWS_AS(clustering::kmeans(three, 0, 0), Error);
    CHECK_THROWS_AS(clustering::kmeans({}, 1, 0), Error);
    Vectors ragged = {{0, 0}, {1}};
    CHECK_THROWS_AS(clustering::kmeans(ragged, 1, 0), Error);
}

TEST_CASE("kmeans with k equal to n leaves zero dispersion") {
    clustering::KmeansConfig cfg;
    cfg.normalize_inputs = false;
    Vectors pts = {{0, 0}, {5, 1}, {-2, 7}, {3, 3}};
    auto model = clustering::kmeans(pts, 4, 42, cfg);
    CHECK(clustering::wcss(model, pts) == 0.0);
}

TEST_CASE("kmeans separates two far blobs") {
    auto pts = two_blobs(10, 3);
    auto model = clustering::kmeans(pts, 2, 9);
    REQUIRE(model.labels.size() == 20);
    int first = model.labels[0];
    int second = model.labels[10];
    CHECK(first != second);
    for (std::size_t i = 0; i < 10; ++i) CHECK(model.labels[i] == first);
    for (std::size_t i = 10; i < 20; ++i) CHECK(model.labels[i] == second);
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
    auto pts = random_points(40, 6, 17);
    auto a = clustering::kmeans(pts, 4, 123);
    auto b = clustering::kmeans(pts, 4, 123);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids == b.centroids);
    auto c = clustering::kmeans(pts, 4, 124);
    CHECK(c.labels.size() == a.labels.size());
}

TEST_CASE("lloyd iterations never increase the objective") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        auto pts = random_points(60, 4, seed);
        auto run = clustering::kmeans_once(pts, 5, seed);
        if (run.reseeds > 0) continue;  // reseeding may bump the trace by design
        REQUIRE(run.wcss_trace.size() >= 1);
        for (std::size_t i = 0; i + 1 < run.wcss_trace.size(); ++i)
            CHECK(run.wcss_trace[i + 1] <= run.wcss_trace[i] + 1e-9);
        CHECK(run.wcss == doctest::Approx(run.wcss_trace.back()).epsilon(1e-12));
    }
}

TEST_CASE("kmeans wcss scales quadratically with the data") {
    clustering::KmeansConfig cfg;
    cfg.normalize_inputs = false;
    for (std::uint64_t seed : {5ull, 6ull}) {
        auto pts = random_points(30, 3, seed);
        auto model = clustering::kmeans(pts, 3, seed, cfg);
        double base = clustering::wcss(model, pts);
        double s = 3.5;
        auto scaled = pts;
        for (auto& row : scaled)
            for (auto& x : row) x *= s;
        // Same labels, scaled data: the objective must scale by s^2.
        CHECK(clustering::wcss(model, scaled) == doctest::Approx(s * s * base).epsilon(1e-9));
    }
}

TEST_CASE("kmeans finds the exhaustive optimum on tiny instances") {
    clustering::KmeansConfig cfg;
    cfg.normalize_inputs = false;
    cfg.n_init = 30;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> n_dist(3, 8);
    std::uniform_int_distribution<int> k_dist(2, 3);
    std::uniform_int_distribution<int> d_dist(1, 3);
    std::normal_distribution<double> coord;
    for (int trial = 0; trial < 10; ++trial) {
        int n = n_dist(rng);
        int k = std::min(k_dist(rng), n);
        int d = d_dist(rng);
        Vectors pts(n, clustering::Vector(d));
        for (auto& row : pts)
            for (auto& x : row) x = coord(rng);
        auto model = clustering::kmeans(pts, k, rng(), cfg);
        double got = clustering::wcss(model, pts);
        double want = testsup::exhaustive_best_wcss(pts, k);
        CAPTURE(trial);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("serial reference and parallel kmeans agree bit for bit") {
    struct Combo {
        std::size_t n, d;
        int k;
        std::uint64_t seed;
    };
    for (auto [n, d, k, seed] : {Combo{30, 4, 3, 1}, Combo{50, 8, 5, 2}, Combo{17, 3, 2, 3},
                                 Combo{64, 16, 6, 4}, Combo{25, 2, 7, 5}}) {
        auto pts = random_points(n, d, seed);
        CAPTURE(n);
        CAPTURE(k);

        auto par_once = clustering::kmeans_once(pts, k, seed);
        auto ser_once = clustering::reference::kmeans_once_serial(pts, k, seed);
        CHECK(par_once.labels == ser_once.labels);
        CHECK(par_once.centroids == ser_once.centroids);
        CHECK(par_once.wcss == ser_once.wcss);
        CHECK(par_once.iterations == ser_once.iterations);

        auto par = clustering::kmeans(pts, k, seed);
        auto ser = clustering::reference::kmeans_serial(pts, k, seed);
        CHECK(par.labels == ser.labels);
        CHECK(par.centroids == ser.centroids);
    }
}

TEST_CASE("attach_members groups reason metadata by cluster") {
    auto pts = two_blobs(2, 7);
    auto model = clustering::kmeans(pts, 2, 7);
    clustering::attach_members(model, {"r1", "r2", "r3", "r4"},
                               {"text one", "text two", "text three", "text four"});
    REQUIRE(model.members.size() == 2);
    CHECK(model.members[0].size() + model.members[1].size() == 4);
    CHECK(model.assignments.at("r1") == model.labels[0]);
    CHECK(model.assignments.at("r4") == model.labels[3]);
    int cluster_of_r1 = model.assignments.at("r1");
    bool found = false;
    for (const auto& m : model.members[cluster_of_r1])
        if (m.reason_id == "r1") {
            found = true;
            CHECK(m.text == "text one");
            CHECK(m.vector_index == 0);
        }
    CHECK(found);
}

TEST_CASE("cluster models round-trip through json exactly") {
    testsup::TempDir tmp("model");
    auto pts = two_blobs(3, 5);
    auto model = clustering::kmeans(pts, 2, 5);
    clustering::attach_members(model, {"a", "b", "c", "d", "e", "f"},
                               {"ta", "tb", "tc", "td", "te", "tf"});
    model.taxonomy_labels = {"first group", "second group"};

    auto path = tmp / "model.json";
    clustering::write_cluster_model(path, model);
    auto back = clustering::read_cluster_model(path);
    CHECK(back.k == model.k);
    CHECK(back.algorithm == model.algorithm);
    CHECK(back.seed == model.seed);
    CHECK(back.centroids == model.centroids);
    CHECK(back.labels == model.labels);
    CHECK(back.assignments == model.assignments);
    CHECK(back.taxonomy_labels == model.taxonomy_labels);
    REQUIRE(back.members.size() == model.members.size());
    for (std::size_t c = 0; c < back.members.size(); ++c) {
        REQUIRE(back.members[c].size() == model.members[c].size());
        for (std::size_t i = 0; i < back.members[c].size(); ++i) {
            CHECK(back.members[c][i].reason_id == model.members[c][i].reason_id);
            CHECK(back.members[c][i].text == model.members[c][i].text);
            CHECK(back.members[c][i].vector_index == model.members[c][i].vector_index);
        }
    }
}

TEST_CASE("embeddings round-trip through jsonl exactly") {
    testsup::TempDir tmp("emb");
    std::vector<clustering::EmbeddedReason> reasons = {
        {"r1", "some text", {0.1, -2.5e-17, 3.0}},
        {"r2", "quoted \"text\" with, commas", {1.0 / 3.0, 2.0 / 7.0}},
    };
    auto path = tmp / "embeddings.jsonl";
    clustering::write_embeddings(path, reasons);
    auto back = clustering::read_embeddings(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].reason_id == reasons[i].reason_id);
        CHECK(back[i].text == reasons[i].text);
        CHECK(back[i].vector == reasons[i].vector);
    }
}

TEST_CASE("algorithm names round-trip") {
    using clustering::Algorithm;
    for (auto a : {Algorithm::kmeans, Algorithm::kmedoids, Algorithm::hierarchical,
                   Algorithm::dbscan}) {
        CHECK(clustering::algorithm_from_string(clustering::to_string(a)) == a);
    }
    CHECK_THROWS_AS(clustering::algorithm_from_string("spectral"), Error);
}
