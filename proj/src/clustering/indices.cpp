#include <cmath>
#include <limits>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"

// Cluster validity indices. All three recompute cluster means from the
// labels rather than trusting stored centroids, so they apply uniformly to
// k-means, k-medoids, hierarchical, and (noise-stripped) DBSCAN results.

namespace errtax::clustering {

namespace {

struct Grouped {
    Vectors means;
    std::vector<std::vector<std::size_t>> members;
    std::size_t active_points = 0;
};

Grouped group(const ClusterModel& model, const Vectors& vectors) {
    if (model.labels.size() != vectors.size()) {
        throw Error("cluster model does not match the vector set");
    }
    if (model.k < 1) throw Error("model has no clusters");
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();

    Grouped g;
    g.means.assign(static_cast<std::size_t>(model.k), Vector(dim, 0.0));
    g.members.assign(static_cast<std::size_t>(model.k), {});
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        int label = model.labels[i];
        if (label == kNoise) continue;
        if (label < 0 || label >= model.k) throw Error("label out of range");
        g.members[static_cast<std::size_t>(label)].push_back(i);
        g.active_points += 1;
    }
    for (std::size_t c = 0; c < g.members.size(); ++c) {
        for (std::size_t i : g.members[c]) {
            for (std::size_t d = 0; d < dim; ++d) g.means[c][d] += vectors[i][d];
        }
        if (!g.members[c].empty()) {
            for (std::size_t d = 0; d < dim; ++d) {
                g.means[c][d] /= static_cast<double>(g.members[c].size());
            }
        }
    }
    return g;
}

}  // namespace

double davies_bouldin(const ClusterModel& model, const Vectors& vectors) {
    if (model.k < 2) throw Error("Davies-Bouldin index requires at least 2 clusters");
    Grouped g = group(model, vectors);
    const auto k = static_cast<std::size_t>(model.k);
    for (std::size_t c = 0; c < k; ++c) {
        if (g.members[c].empty()) throw Error("Davies-Bouldin index requires no empty cluster");
    }

    // Mean distance of members to their cluster mean.
    std::vector<double> sigma(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double sum = 0.0;
        for (std::size_t i : g.members[c]) {
            sum += std::sqrt(squared_distance(vectors[i], g.means[c]));
        }
        sigma[c] = sum / static_cast<double>(g.members[c].size());
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            double separation = std::sqrt(squared_distance(g.means[i], g.means[j]));
            if (separation == 0.0) {
                throw Error("Davies-Bouldin index undefined: coincident cluster centroids");
            }
            worst = std::max(worst, (sigma[i] + sigma[j]) / separation);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

double silhouette(const ClusterModel& model, const Vectors& vectors) {
    if (model.k < 2) throw Error("silhouette requires at least 2 clusters");
    Grouped g = group(model, vectors);
    const auto n = static_cast<std::int64_t>(vectors.size());

    std::vector<double> scores(vectors.size(), 0.0);
    std::vector<char> counted(vectors.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < n; ++ii) {
        auto i = static_cast<std::size_t>(ii);
        int label = model.labels[i];
        if (label == kNoise) continue;
        auto own = static_cast<std::size_t>(label);
        counted[i] = 1;
        // Singleton clusters contribute 0 by convention.
        if (g.members[own].size() <= 1) continue;

        double a = 0.0;
        for (std::size_t j : g.members[own]) {
            if (j == i) continue;
            a += std::sqrt(squared_distance(vectors[i], vectors[j]));
        }
        a /= static_cast<double>(g.members[own].size() - 1);

        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < g.members.size(); ++c) {
            if (c == own || g.members[c].empty()) continue;
            double mean = 0.0;
            for (std::size_t j : g.members[c]) {
                mean += std::sqrt(squared_distance(vectors[i], vectors[j]));
            }
            mean /= static_cast<double>(g.members[c].size());
            b = std::min(b, mean);
        }
        double denom = std::max(a, b);
        scores[i] = denom == 0.0 ? 0.0 : (b - a) / denom;
    }

    double total = 0.0;
    std::size_t counted_points = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!counted[i]) continue;
        total += scores[i];
        counted_points += 1;
    }
    if (counted_points == 0) throw Error("silhouette has no labeled points");
    return total / static_cast<double>(counted_points);
}

double calinski_harabasz(const ClusterModel& model, const Vectors& vectors) {
    Grouped g = group(model, vectors);
    const std::size_t n = g.active_points;
    const auto k = static_cast<std::size_t>(model.k);
    if (model.k < 2 || static_cast<std::size_t>(model.k) >= n) {
        throw Error("Calinski-Harabasz index requires 2 <= k < n");
    }
    const std::size_t dim = vectors.front().size();

    Vector overall(dim, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i : g.members[c]) {
            for (std::size_t d = 0; d < dim; ++d) overall[d] += vectors[i][d];
        }
    }
    for (std::size_t d = 0; d < dim; ++d) overall[d] /= static_cast<double>(n);

    double between = 0.0;
    double within = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (g.members[c].empty()) continue;
        between += static_cast<double>(g.members[c].size()) *
                   squared_distance(g.means[c], overall);
        for (std::size_t i : g.members[c]) {
            within += squared_distance(vectors[i], g.means[c]);
        }
    }
    if (within == 0.0) return std::numeric_limits<double>::infinity();
    return (between / within) * (static_cast<double>(n - k) / static_cast<double>(k - 1));
}

}  // namespace errtax::clustering
