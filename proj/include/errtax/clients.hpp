#pragma once

// Completion and embedding backends: deterministic offline doubles for tests
// and pipelines, plus JSON-over-HTTP remote clients with retry and a disk
// cache.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "errtax/corpus.hpp"

namespace errtax::clients {

struct CompletionParams {
    std::string model_id = "gpt-4o";
    double temperature = 0.7;
    int max_tokens = 2048;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
};

void validate(const CompletionParams& params);

using EmbeddingVector = std::vector<double>;

inline constexpr int kDefaultEmbeddingDim = 3072;

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual std::string complete(const std::string& prompt, const CompletionParams& params) = 0;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    // One vector per input text, order preserving, all of dimension().
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual int dimension() const = 0;
};

// Fixture-backed double: exact prompt -> scripted text, otherwise the
// documented fallback marker.
inline constexpr const char* kUnknownFixture = "UNKNOWN-FIXTURE";

class MockCompletionClient : public CompletionClient {
public:
    void script(std::string prompt, std::string response);
    std::string complete(const std::string& prompt, const CompletionParams& params) override;

    const std::vector<std::string>& calls() const { return calls_; }

private:
    std::map<std::string, std::string> responses_;
    std::vector<std::string> calls_;
};

// Deterministic pseudo-embeddings: unit vectors seeded from (seed, text).
EmbeddingVector mock_embed(const std::string& text, int d, std::uint64_t seed);

class MockEmbeddingClient : public EmbeddingClient {
public:
    MockEmbeddingClient(int d, std::uint64_t seed) : d_(d), seed_(seed) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return d_; }

private:
    int d_;
    std::uint64_t seed_;
};

// Self-contained stand-in for a remote model. It recognizes which prompt
// template produced a request (via the templates' fixed instruction lines)
// and synthesizes a plausible deterministic response: solutions for
// chain-of-thought prompts, verdicts for checker prompts, analyses with
// abstract reasons for analyzer prompts, and so on. Repeated identical
// prompts cycle through variants so sampled solutions differ, mirroring a
// temperature>0 model while staying reproducible run to run.
class OfflineCompletionClient : public CompletionClient {
public:
    explicit OfflineCompletionClient(std::uint64_t seed) : seed_(seed) {}
    std::string complete(const std::string& prompt, const CompletionParams& params) override;

private:
    std::uint64_t seed_;
    std::map<std::uint64_t, int> repeat_counts_;
};

struct RetryPolicy {
    int max_attempts = 5;
    int backoff_base_ms = 500;
    double backoff_factor = 2.0;
};

struct RemoteConfig {
    std::string base_url = "http://localhost:8080";
    std::string api_key_env = "MODEL_API_KEY";
    std::string completions_path = "/v1/chat/completions";
    std::string embeddings_path = "/v1/embeddings";
    std::string embedding_model = "text-embedding-3-large";
    int embedding_dim = kDefaultEmbeddingDim;
    int embed_batch_size = 64;
    RetryPolicy retry;
    std::optional<std::filesystem::path> cache_dir;
};

class RemoteCompletionClient : public CompletionClient {
public:
    explicit RemoteCompletionClient(RemoteConfig config);
    std::string complete(const std::string& prompt, const CompletionParams& params) override;

private:
    RemoteConfig config_;
};

class RemoteEmbeddingClient : public EmbeddingClient {
public:
    explicit RemoteEmbeddingClient(RemoteConfig config);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return config_.embedding_dim; }

private:
    RemoteConfig config_;
};

struct GenerationFailure {
    int sample_index = 0;
    std::string message;
};

struct GenerationResult {
    std::vector<corpus::SolutionSample> samples;
    std::vector<GenerationFailure> failures;
};

// n completions of the chain-of-thought prompt for one problem; answers are
// extracted and graded against the gold answer. Per-sample client errors are
// recorded, not fatal.
GenerationResult generate_solutions(const corpus::ProblemRecord& problem,
                                    const std::string& model_id, int n, CompletionClient& client,
                                    const CompletionParams& base_params = CompletionParams{});

}  // namespace errtax::clients
