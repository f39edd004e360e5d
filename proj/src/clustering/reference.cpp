#include <algorithm>
#include <cmath>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

// Plain serial k-means, written independently of the OpenMP kernels and kept
// as their ground truth: the test suite asserts bit-identical centroids,
// labels, and objective traces between the two, and the benchmark tool times
// one against the other. The RNG consumption order (seeding draws, restart
// sub-seeds) matches kmeans.cpp exactly; that order is part of the contract.

namespace errtax::clustering::reference {

namespace {

double dist2(const Vector& u, const Vector& v) {
    double sum = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        double diff = u[d] - v[d];
        sum += diff * diff;
    }
    return sum;
}

Vectors seed_centroids(const Vectors& vectors, int k, std::mt19937_64& engine) {
    const std::size_t n = vectors.size();
    Vectors centroids;
    centroids.push_back(vectors[rng::uniform_index(engine, n)]);

    std::vector<double> best(n);
    for (std::size_t i = 0; i < n; ++i) best[i] = dist2(vectors[i], centroids[0]);

    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += best[i];
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng::uniform_index(engine, n);
        } else {
            double r = rng::uniform_double(engine) * total;
            double cum = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += best[i];
                if (cum > r) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(vectors[chosen]);
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = dist2(vectors[i], centroids.back());
            if (d2 < best[i]) best[i] = d2;
        }
    }
    return centroids;
}

}  // namespace

KmeansRun kmeans_once_serial(const Vectors& input, int k, std::uint64_t seed,
                             const KmeansConfig& config) {
    if (input.empty()) throw Error("cannot cluster an empty vector set");
    if (k < 1 || static_cast<std::size_t>(k) > input.size()) throw Error("invalid k");
    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;
    const std::size_t n = vectors.size();
    const std::size_t dim = vectors.front().size();

    auto engine = rng::make_engine(seed);
    KmeansRun run;
    run.centroids = seed_centroids(vectors, k, engine);
    run.labels.assign(n, 0);
    std::vector<double> min_d2(n, 0.0);

    auto assign = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            int label = 0;
            double best = dist2(vectors[i], run.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d2 = dist2(vectors[i], run.centroids[static_cast<std::size_t>(c)]);
                if (d2 < best) {
                    best = d2;
                    label = c;
                }
            }
            run.labels[i] = label;
            min_d2[i] = best;
        }
    };

    for (int iter = 0; iter < config.max_iter; ++iter) {
        assign();
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) objective += min_d2[i];
        run.wcss_trace.push_back(objective);
        run.iterations = iter + 1;

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
            run.reseeds += 1;
            std::size_t farthest = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                double d2 = dist2(vectors[i], run.centroids[c]);
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
            shift = std::max(shift, std::sqrt(dist2(run.centroids[c], next[c])));
        }
        run.centroids = std::move(next);
        if (shift < config.tol) break;
    }

    assign();
    run.wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) run.wcss += min_d2[i];
    run.wcss_trace.push_back(run.wcss);
    return run;
}

ClusterModel kmeans_serial(const Vectors& input, int k, std::uint64_t seed,
                           const KmeansConfig& config) {
    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;
    KmeansConfig inner = config;
    inner.normalize_inputs = false;

    const int restarts = std::max(1, config.n_init);
    KmeansRun best;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        KmeansRun run = kmeans_once_serial(
            vectors, k, rng::derive_seed(seed, static_cast<std::uint64_t>(r)), inner);
        if (!have_best || run.wcss < best.wcss) {
            best = std::move(run);
            have_best = true;
        }
    }

    ClusterModel model;
    model.k = k;
    model.algorithm = Algorithm::kmeans;
    model.seed = seed;
    model.centroids = std::move(best.centroids);
    model.labels = std::move(best.labels);
    return model;
}

}  // namespace errtax::clustering::reference
