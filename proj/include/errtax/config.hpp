#pragma once

// Run configuration: one document covering client endpoints, model ids,
// generation parameters, k-selection constants, and retrieval constants,
// loadable from JSON with every field optional. The config hash stamps
// artifacts so stale outputs are detected across reruns.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "errtax/clients.hpp"
#include "errtax/clustering.hpp"
#include "errtax/eap.hpp"

namespace errtax {

struct ModelIds {
    std::string solver = "gpt-4o";
    std::string analyzer = "gpt-4o";
    std::string checker = "gpt-4o";
    std::string labeler = "gpt-4o";
    std::string embedding = "text-embedding-3-large";
};

struct Config {
    // Run identity
    std::uint64_t seed = 0;
    bool offline = false;
    std::filesystem::path out_dir = "out";

    // Inputs
    std::filesystem::path problems_path;
    std::filesystem::path solutions_path;  // optional pre-generated solutions
    std::string dataset_kind = "gsm8k";
    std::filesystem::path prompt_dir;  // empty: located relative to the binary

    // Clients
    ModelIds models;
    clients::RemoteConfig remote;
    clients::CompletionParams generation;
    int samples_per_problem = corpus::kDefaultSamplesPerProblem;
    int embedding_dim = clients::kDefaultEmbeddingDim;
    double audit_fraction = 0.1;

    // Clustering
    clustering::SelectKConfig select_k;
    std::optional<int> fixed_k;  // bypasses selection when set

    // Retrieval
    eap::EapConfig eap;
};

Config load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const Config& config);

// fnv1a over the canonical JSON dump, excluding seed and out_dir: the seed
// is stamped on artifacts separately and the output directory does not
// change what gets computed.
std::string config_hash(const Config& config);

}  // namespace errtax
