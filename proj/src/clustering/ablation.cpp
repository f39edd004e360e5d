#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

// Alternative clusterers used for head-to-head validity comparisons against
// k-means: PAM k-medoids, agglomerative clustering with Ward linkage, and
// DBSCAN.

namespace errtax::clustering {

namespace {

std::vector<double> pairwise_distances(const Vectors& vectors) {
    const std::size_t n = vectors.size();
    std::vector<double> dist(n * n, 0.0);
    const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < nn; ++i) {
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j) {
            double d = std::sqrt(squared_distance(vectors[static_cast<std::size_t>(i)], vectors[j]));
            dist[static_cast<std::size_t>(i) * n + j] = d;
            dist[j * n + static_cast<std::size_t>(i)] = d;
        }
    }
    return dist;
}

double total_cost(const std::vector<double>& dist, std::size_t n,
                  const std::vector<std::size_t>& medoids, std::vector<int>* labels) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_m = 0;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            double d = dist[i * n + medoids[m]];
            if (d < best) {
                best = d;
                best_m = static_cast<int>(m);
            }
        }
        cost += best;
        if (labels) (*labels)[i] = best_m;
    }
    return cost;
}

// PAM: k-means++-style seeding over the distance matrix, then greedy
// best-improvement swaps until no swap lowers the summed distance.
ClusterModel pam_kmedoids(const Vectors& vectors, int k, std::uint64_t seed, int max_iter) {
    const std::size_t n = vectors.size();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw Error("invalid k for k-medoids");
    std::vector<double> dist = pairwise_distances(vectors);

    auto engine = rng::make_engine(seed);
    std::vector<std::size_t> medoids;
    medoids.push_back(rng::uniform_index(engine, n));
    std::vector<double> best_d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = dist[i * n + medoids[0]];
        best_d2[i] = d * d;
    }
    while (medoids.size() < static_cast<std::size_t>(k)) {
        double total = std::accumulate(best_d2.begin(), best_d2.end(), 0.0);
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng::uniform_index(engine, n);
        } else {
            double r = rng::uniform_double(engine) * total;
            double cum = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += best_d2[i];
                if (cum > r) {
                    chosen = i;
                    break;
                }
            }
        }
        medoids.push_back(chosen);
        for (std::size_t i = 0; i < n; ++i) {
            double d = dist[i * n + chosen];
            best_d2[i] = std::min(best_d2[i], d * d);
        }
    }

    std::vector<int> labels(n, 0);
    double cost = total_cost(dist, n, medoids, &labels);
    for (int iter = 0; iter < max_iter; ++iter) {
        double best_delta = 0.0;
        std::size_t best_m = 0, best_p = 0;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            for (std::size_t p = 0; p < n; ++p) {
                if (std::find(medoids.begin(), medoids.end(), p) != medoids.end()) continue;
                std::vector<std::size_t> candidate = medoids;
                candidate[m] = p;
                double delta = total_cost(dist, n, candidate, nullptr) - cost;
                if (delta < best_delta - 1e-12) {
                    best_delta = delta;
                    best_m = m;
                    best_p = p;
                }
            }
        }
        if (best_delta >= 0.0) break;
        medoids[best_m] = best_p;
        cost = total_cost(dist, n, medoids, &labels);
    }
    total_cost(dist, n, medoids, &labels);

    ClusterModel model;
    model.k = k;
    model.algorithm = Algorithm::kmedoids;
    model.seed = seed;
    model.labels = std::move(labels);
    for (std::size_t m : medoids) model.centroids.push_back(vectors[m]);
    return model;
}

// Agglomerative clustering, Ward linkage via the Lance-Williams update on
// squared distances, merging until k clusters remain.
ClusterModel ward_hierarchical(const Vectors& vectors, int k) {
    const std::size_t n = vectors.size();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw Error("invalid k for hierarchical clustering");

    std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = squared_distance(vectors[i], vectors[j]);
            d2[i][j] = v;
            d2[j][i] = v;
        }
    }

    std::vector<bool> alive(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<int> cluster_of(n);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};

    std::size_t remaining = n;
    while (remaining > static_cast<std::size_t>(k)) {
        // Closest pair; ties resolve to the smallest index pair.
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                if (d2[i][j] < best) {
                    best = d2[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        // Lance-Williams coefficients for Ward linkage.
        for (std::size_t h = 0; h < n; ++h) {
            if (!alive[h] || h == bi || h == bj) continue;
            double ni = static_cast<double>(size[bi]);
            double nj = static_cast<double>(size[bj]);
            double nh = static_cast<double>(size[h]);
            double denom = ni + nj + nh;
            double merged = ((ni + nh) / denom) * d2[bi][h] + ((nj + nh) / denom) * d2[bj][h] -
                            (nh / denom) * d2[bi][bj];
            d2[bi][h] = merged;
            d2[h][bi] = merged;
        }
        alive[bj] = false;
        size[bi] += size[bj];
        members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
        members[bj].clear();
        remaining -= 1;
    }

    // Stable cluster numbering by smallest member index.
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) roots.push_back(i);
    }
    std::sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) {
        return *std::min_element(members[a].begin(), members[a].end()) <
               *std::min_element(members[b].begin(), members[b].end());
    });

    ClusterModel model;
    model.k = k;
    model.algorithm = Algorithm::hierarchical;
    model.labels.assign(n, 0);
    const std::size_t dim = vectors.front().size();
    for (std::size_t c = 0; c < roots.size(); ++c) {
        Vector mean(dim, 0.0);
        for (std::size_t i : members[roots[c]]) {
            model.labels[i] = static_cast<int>(c);
            for (std::size_t d = 0; d < dim; ++d) mean[d] += vectors[i][d];
        }
        for (std::size_t d = 0; d < dim; ++d) {
            mean[d] /= static_cast<double>(members[roots[c]].size());
        }
        model.centroids.push_back(std::move(mean));
    }
    return model;
}

ClusterModel dbscan(const Vectors& vectors, double eps, int min_samples) {
    const std::size_t n = vectors.size();
    if (eps <= 0.0) throw Error("DBSCAN eps must be positive");
    if (min_samples < 1) throw Error("DBSCAN min_samples must be >= 1");
    std::vector<double> dist = pairwise_distances(vectors);

    auto neighbors = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j) {
            if (dist[i * n + j] <= eps) out.push_back(j);  // includes i itself
        }
        return out;
    };

    std::vector<int> labels(n, kNoise);
    std::vector<bool> visited(n, false);
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = true;
        std::vector<std::size_t> seeds = neighbors(i);
        if (seeds.size() < static_cast<std::size_t>(min_samples)) continue;
        int cluster = next_cluster++;
        labels[i] = cluster;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            std::size_t j = seeds[s];
            if (labels[j] == kNoise) labels[j] = cluster;
            if (visited[j]) continue;
            visited[j] = true;
            labels[j] = cluster;
            std::vector<std::size_t> expansion = neighbors(j);
            if (expansion.size() >= static_cast<std::size_t>(min_samples)) {
                seeds.insert(seeds.end(), expansion.begin(), expansion.end());
            }
        }
    }

    ClusterModel model;
    model.k = next_cluster;
    model.algorithm = Algorithm::dbscan;
    model.labels = std::move(labels);
    const std::size_t dim = vectors.front().size();
    model.centroids.assign(static_cast<std::size_t>(model.k), Vector(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(model.k), 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (model.labels[i] == kNoise) continue;
        auto c = static_cast<std::size_t>(model.labels[i]);
        counts[c] += 1;
        for (std::size_t d = 0; d < dim; ++d) model.centroids[c][d] += vectors[i][d];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d) {
            model.centroids[c][d] /= static_cast<double>(counts[c]);
        }
    }
    return model;
}

}  // namespace

std::pair<ClusterModel, ValidityMetrics> cluster_ablation(const Vectors& input,
                                                          Algorithm algorithm,
                                                          const AblationConfig& config,
                                                          std::uint64_t seed) {
    if (input.empty()) throw Error("cannot cluster an empty vector set");
    const Vectors vectors = config.normalize_inputs ? normalized_rows(input) : input;

    ClusterModel model;
    switch (algorithm) {
        case Algorithm::kmedoids:
            model = pam_kmedoids(vectors, config.k, seed, config.max_iter);
            break;
        case Algorithm::hierarchical:
            model = ward_hierarchical(vectors, config.k);
            model.seed = seed;
            break;
        case Algorithm::dbscan:
            model = dbscan(vectors, config.dbscan_eps, config.dbscan_min_samples);
            model.seed = seed;
            break;
        case Algorithm::kmeans:
            throw Error("use kmeans() for the primary algorithm");
    }

    if (algorithm == Algorithm::dbscan && model.k < 2) {
        throw Error("DBSCAN produced fewer than 2 clusters; validity metrics unavailable");
    }

    ValidityMetrics metrics;
    metrics.silhouette = silhouette(model, vectors);
    metrics.davies_bouldin = davies_bouldin(model, vectors);
    // A cut at k = n leaves zero within-cluster dispersion, which the index
    // itself rejects; the comparison table wants the infinity sentinel there.
    metrics.calinski_harabasz = static_cast<std::size_t>(model.k) >= vectors.size()
                                    ? std::numeric_limits<double>::infinity()
                                    : calinski_harabasz(model, vectors);
    return {std::move(model), metrics};
}

}  // namespace errtax::clustering
