#include <algorithm>
#include <cmath>
#include <limits>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

// Parallel/serial determinism contract for every kernel in this file:
// parallel loops only fill per-index slots (labels, distances, per-restart
// results); every reduction and every RNG draw happens serially in a fixed
// order. The result is bit-identical for any thread count, and bit-identical
// to reference.cpp's serial implementation.

namespace errtax::clustering {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::kmeans: return "kmeans";
        case Algorithm::kmedoids: return "kmedoids";
        case Algorithm::hierarchical: return "hierarchical";
        case Algorithm::dbscan: return "dbscan";
    }
    return "kmeans";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "kmeans") return Algorithm::kmeans;
    if (s == "kmedoids") return Algorithm::kmedoids;
    if (s == "hierarchical") return Algorithm::hierarchical;
    if (s == "dbscan") return Algorithm::dbscan;
    throw Error("unknown clustering algorithm \"" + s + "\"");
}

double squared_distance(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) throw Error("vector dimension mismatch");
    double sum = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        double diff = u[d] - v[d];
        sum += diff * diff;
    }
    return sum;
}

double cosine_similarity(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) throw Error("vector dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        dot += u[d] * v[d];
        nu += u[d] * u[d];
        nv += v[d] * v[d];
    }
    if (nu == 0.0 || nv == 0.0) throw Error("cosine similarity of a zero vector is undefined");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

Vectors normalized_rows(const Vectors& vectors) {
    Vectors out = vectors;
    for (auto& v : out) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // zero rows pass through unchanged
        for (auto& x : v) x /= norm;
    }
    return out;
}

namespace detail {

void check_inputs(const Vectors& vectors, int k) {
    if (vectors.empty()) throw Error("cannot cluster an empty vector set");
    if (k < 1) throw Error("k must be >= 1");
    if (static_cast<std::size_t>(k) > vectors.size()) {
        throw Error("k (" + std::to_string(k) + ") exceeds the number of points (" +
                    std::to_string(vectors.size()) + ")");
    }
    const std::size_t d = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != d) throw Error("vector dimension mismatch");
    }
}

// k-means++ seeding: first centroid uniform, then each next centroid drawn
// with probability proportional to the squared distance to the nearest
// chosen centroid. RNG consumption order is part of the determinism
// contract; reference.cpp repeats it verbatim.
Vectors kmeanspp_init(const Vectors& vectors, int k, std::mt19937_64& engine) {
    const std::size_t n = vectors.size();
    Vectors centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(vectors[rng::uniform_index(engine, n)]);

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = squared_distance(vectors[i], centroids[0]);

    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += dist2[i];
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng::uniform_index(engine, n);
        } else {
            double r = rng::uniform_double(engine) * total;
            double cum = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (cum > r) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(vectors[chosen]);
        const Vector& c = centroids.back();
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = squared_distance(vectors[i], c);
            if (d2 < dist2[i]) dist2[i] = d2;
        }
    }
    return centroids;
}

}  // namespace detail

namespace {

// One Lloyd pass of assignments; ties go to the lowest cluster index.
void assign_points(const Vectors& vectors, const Vectors& centroids, std::vector<int>& labels,
                   std::vector<double>& min_dist2) {
    const std::int64_t n = static_cast<std::int64_t>(vectors.size());
    const int k = static_cast<int>(centroids.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d2 = squared_distance(vectors[static_cast<std::size_t>(i)], centroids[0]);
        for (int c = 1; c < k; ++c) {
            double d2 = squared_distance(vectors[static_cast<std::size_t>(i)],
                                         centroids[static_cast<std::size_t>(c)]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        min_dist2[static_cast<std::size_t>(i)] = best_d2;
    }
}

}  // namespace

KmeansRun kmeans_once(const Vectors& input, int k, std::uint64_t seed, const KmeansConfig& config) {
    detail::check_inputs(input, k);
    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    auto engine = rng::make_engine(seed);
    KmeansRun run;
    run.centroids = detail::kmeanspp_init(vectors, k, engine);
    run.labels.assign(n, 0);
    std::vector<double> min_dist2(n, 0.0);

    for (int iter = 0; iter < config.max_iter; ++iter) {
        assign_points(vectors, run.centroids, run.labels, min_dist2);

        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) objective += min_dist2[i];
        run.wcss_trace.push_back(objective);
        run.iterations = iter + 1;

        // Serial mean update in point order.
        Vectors sums(static_cast<std::size_t>(k), Vector(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(run.labels[i]);
            counts[c] += 1;
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += vectors[i][d];
        }

        Vectors next(static_cast<std::size_t>(k), Vector(dim, 0.0));
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] > 0) {
                for (std::size_t d = 0; d < dim; ++d) {
                    next[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                }
                continue;
            }
            // Empty cluster: reseed to the point farthest from this
            // cluster's previous centroid, skipping points already used to
            // reseed in this round.
            run.reseeds += 1;
            std::size_t farthest = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                double d2 = squared_distance(vectors[i], run.centroids[c]);
                if (d2 > best) {
                    best = d2;
                    farthest = i;
                }
            }
            taken[farthest] = true;
            next[c] = vectors[farthest];
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            double d2 = squared_distance(run.centroids[c], next[c]);
            shift = std::max(shift, std::sqrt(d2));
        }
        run.centroids = std::move(next);
        if (shift < config.tol) break;
    }

    assign_points(vectors, run.centroids, run.labels, min_dist2);
    run.wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) run.wcss += min_dist2[i];
    run.wcss_trace.push_back(run.wcss);
    return run;
}

ClusterModel kmeans(const Vectors& input, int k, std::uint64_t seed, const KmeansConfig& config) {
    detail::check_inputs(input, k);
    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;
    KmeansConfig inner = config;
    inner.normalize_inputs = false;

    const int restarts = std::max(1, config.n_init);
    std::vector<KmeansRun> runs(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < restarts; ++r) {
        runs[static_cast<std::size_t>(r)] =
            kmeans_once(vectors, k, rng::derive_seed(seed, static_cast<std::uint64_t>(r)), inner);
    }

    // Lowest WCSS wins; ties resolve to the earliest restart.
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].wcss < runs[best].wcss) best = r;
    }

    ClusterModel model;
    model.k = k;
    model.algorithm = Algorithm::kmeans;
    model.seed = seed;
    model.centroids = std::move(runs[best].centroids);
    model.labels = std::move(runs[best].labels);
    return model;
}

double wcss(const ClusterModel& model, const Vectors& vectors) {
    if (model.labels.size() != vectors.size()) {
        throw Error("cluster model does not match the vector set");
    }
    if (vectors.empty()) return 0.0;
    const std::size_t dim = vectors.front().size();
    const auto k = static_cast<std::size_t>(model.k);

    Vectors means(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        int label = model.labels[i];
        if (label == kNoise) continue;
        if (label < 0 || label >= model.k) throw Error("label out of range");
        auto c = static_cast<std::size_t>(label);
        counts[c] += 1;
        for (std::size_t d = 0; d < dim; ++d) means[c][d] += vectors[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d) means[c][d] /= static_cast<double>(counts[c]);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (model.labels[i] == kNoise) continue;
        total += squared_distance(vectors[i], means[static_cast<std::size_t>(model.labels[i])]);
    }
    return total;
}

void attach_members(ClusterModel& model, const std::vector<std::string>& reason_ids,
                    const std::vector<std::string>& reason_texts) {
    if (reason_ids.size() != model.labels.size() || reason_texts.size() != model.labels.size()) {
        throw Error("reason metadata does not match the cluster model");
    }
    model.assignments.clear();
    model.members.assign(static_cast<std::size_t>(model.k), {});
    for (std::size_t i = 0; i < reason_ids.size(); ++i) {
        int label = model.labels[i];
        if (label == kNoise) continue;
        model.assignments[reason_ids[i]] = label;
        model.members[static_cast<std::size_t>(label)].push_back(
            {reason_ids[i], reason_texts[i], i});
    }
}

}  // namespace errtax::clustering
