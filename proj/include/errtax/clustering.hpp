#pragma once

// K-means and ablation clusterers, cluster validity indices, and the
// three-stage procedure for choosing the number of clusters (elbow interval,
// gap statistic with the one-standard-error rule, Davies-Bouldin refinement
// with stability reruns).
//
// The hot kernels (point assignment, restarts, reference-set clustering,
// pairwise-distance loops) run under OpenMP; a plain serial implementation
// of k-means lives in reference.cpp, is asserted bit-identical in tests, and
// is raced against the parallel path by the benchmark tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errtax/clients.hpp"
#include "errtax/prompts.hpp"

namespace errtax::clustering {

using Vector = std::vector<double>;
using Vectors = std::vector<Vector>;

enum class Algorithm { kmeans, kmedoids, hierarchical, dbscan };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct KmeansConfig {
    int n_init = 10;
    int max_iter = 300;
    double tol = 1e-4;
    // Normalize inputs to unit L2 norm before clustering so Euclidean
    // distances track the cosine geometry used at retrieval time. Raw-vector
    // mode is kept for comparison.
    bool normalize_inputs = true;
};

struct Member {
    std::string reason_id;
    std::string text;
    std::size_t vector_index = 0;
};

struct ClusterModel {
    int k = 0;
    Algorithm algorithm = Algorithm::kmeans;
    std::uint64_t seed = 0;
    Vectors centroids;
    // Per input vector; kNoise for DBSCAN outliers.
    std::vector<int> labels;
    std::map<std::string, int> assignments;
    std::vector<std::vector<Member>> members;
    std::vector<std::string> taxonomy_labels;
};

inline constexpr int kNoise = -1;

// Fills assignments/members from per-vector reason metadata.
void attach_members(ClusterModel& model, const std::vector<std::string>& reason_ids,
                    const std::vector<std::string>& reason_texts);

double cosine_similarity(const Vector& u, const Vector& v);
double squared_distance(const Vector& u, const Vector& v);
Vectors normalized_rows(const Vectors& vectors);

ClusterModel kmeans(const Vectors& vectors, int k, std::uint64_t seed,
                    const KmeansConfig& config = {});

// Diagnostics for one restart, exposed for the objective-monotonicity tests
// and the serial/parallel equivalence checks.
struct KmeansRun {
    Vectors centroids;
    std::vector<int> labels;
    std::vector<double> wcss_trace;
    int iterations = 0;
    int reseeds = 0;
    double wcss = 0.0;
};

KmeansRun kmeans_once(const Vectors& vectors, int k, std::uint64_t seed,
                      const KmeansConfig& config = {});

// Recomputes cluster means from the labels; the stored centroids are not
// trusted. DBSCAN noise points are skipped.
double wcss(const ClusterModel& model, const Vectors& vectors);

struct GapStat {
    double gap = 0.0;
    double se = 0.0;
    // Raw ingredients kept so the formula can be re-derived in tests.
    double data_log_wcss = 0.0;
    std::vector<double> ref_log_wcss;
};

inline constexpr int kDefaultGapReferences = 100;

std::map<int, GapStat> gap_statistic(const Vectors& vectors, int k_lo, int k_hi, int B,
                                     std::uint64_t seed, const KmeansConfig& config = {});

// Smallest k with Gap(k) >= Gap(k+1) - SE(k+1); when no k qualifies, the
// argmax of the gap is returned and *fallback set.
int select_k_one_se(const std::map<int, GapStat>& gap_map, bool* fallback = nullptr);

double davies_bouldin(const ClusterModel& model, const Vectors& vectors);
double silhouette(const ClusterModel& model, const Vectors& vectors);
double calinski_harabasz(const ClusterModel& model, const Vectors& vectors);

// Elbow of a WCSS curve: the k maximizing the discrete second difference,
// returned as the interval [k-5, k+5] clipped to the curve's domain.
std::pair<int, int> detect_elbow(const std::map<int, double>& wcss_curve);

struct SelectKConfig {
    int k_min = 1;
    int k_max = 50;
    int gap_references = kDefaultGapReferences;
    int dbi_neighborhood = 3;
    int stability_runs = 10;
    int stability_quorum = 6;
    KmeansConfig kmeans;
};

struct KSelectionReport {
    std::map<int, double> wcss_curve;
    std::pair<int, int> elbow_candidate_range{1, 1};
    std::map<int, GapStat> gap_values;
    int gap_choice = 1;
    bool gap_fallback = false;
    std::map<int, double> dbi_values;
    int final_k = 1;
    std::vector<int> stability_runs;
    bool stable = false;
};

KSelectionReport select_k(const Vectors& vectors, std::uint64_t seed,
                          const SelectKConfig& config = {});

struct AblationConfig {
    int k = 2;
    double dbscan_eps = 0.5;
    int dbscan_min_samples = 5;
    int max_iter = 300;
    bool normalize_inputs = true;
};

struct ValidityMetrics {
    double silhouette = 0.0;
    double davies_bouldin = 0.0;
    double calinski_harabasz = 0.0;
};

std::pair<ClusterModel, ValidityMetrics> cluster_ablation(const Vectors& vectors,
                                                          Algorithm algorithm,
                                                          const AblationConfig& config,
                                                          std::uint64_t seed);

std::string label_cluster(const std::vector<std::string>& member_reasons,
                          clients::CompletionClient& client, const prompts::PromptTemplate& tmpl,
                          const clients::CompletionParams& params = {});

// Embedding store and model files round-trip vectors exactly: the decimal
// serialization preserves every binary64 value.
struct EmbeddedReason {
    std::string reason_id;
    std::string text;
    Vector vector;
};

void write_embeddings(const std::filesystem::path& path,
                      const std::vector<EmbeddedReason>& reasons);
std::vector<EmbeddedReason> read_embeddings(const std::filesystem::path& path);

void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel read_cluster_model(const std::filesystem::path& path);

namespace reference {

// Straight-line serial k-means used as the comparison baseline for the
// OpenMP path. Kept intentionally free of the parallel code's structure.
KmeansRun kmeans_once_serial(const Vectors& vectors, int k, std::uint64_t seed,
                             const KmeansConfig& config = {});
ClusterModel kmeans_serial(const Vectors& vectors, int k, std::uint64_t seed,
                           const KmeansConfig& config = {});

}  // namespace reference

}  // namespace errtax::clustering
