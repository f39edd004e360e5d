#include "errtax/config.hpp"

#include <cstdio>
#include <fstream>

#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

namespace errtax {

namespace {

using nlohmann::json;

// Reads j[key] into out when present, leaving the default otherwise.
template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void get_if(const json& j, const char* key, std::filesystem::path& out) {
    if (j.contains(key)) out = std::filesystem::path(j.at(key).get<std::string>());
}

std::string embedder_to_string(eap::Embedder e) {
    return e == eap::Embedder::tfidf ? "tfidf" : "model_embedding";
}

eap::Embedder embedder_from_string(const std::string& s) {
    if (s == "tfidf") return eap::Embedder::tfidf;
    if (s == "model_embedding") return eap::Embedder::model_embedding;
    throw Error("unknown knowledge embedder: " + s);
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("config " + path.string() + " is not valid JSON");

    Config c;
    get_if(j, "seed", c.seed);
    get_if(j, "offline", c.offline);
    get_if(j, "out_dir", c.out_dir);
    get_if(j, "problems_path", c.problems_path);
    get_if(j, "solutions_path", c.solutions_path);
    get_if(j, "dataset_kind", c.dataset_kind);
    get_if(j, "prompt_dir", c.prompt_dir);

    if (j.contains("models")) {
        const json& m = j.at("models");
        get_if(m, "solver", c.models.solver);
        get_if(m, "analyzer", c.models.analyzer);
        get_if(m, "checker", c.models.checker);
        get_if(m, "labeler", c.models.labeler);
        get_if(m, "embedding", c.models.embedding);
    }
    if (j.contains("remote")) {
        const json& r = j.at("remote");
        get_if(r, "base_url", c.remote.base_url);
        get_if(r, "api_key_env", c.remote.api_key_env);
        get_if(r, "completions_path", c.remote.completions_path);
        get_if(r, "embeddings_path", c.remote.embeddings_path);
        get_if(r, "embedding_model", c.remote.embedding_model);
        get_if(r, "embedding_dim", c.remote.embedding_dim);
        get_if(r, "embed_batch_size", c.remote.embed_batch_size);
        get_if(r, "max_attempts", c.remote.retry.max_attempts);
        get_if(r, "backoff_base_ms", c.remote.retry.backoff_base_ms);
        get_if(r, "backoff_factor", c.remote.retry.backoff_factor);
        if (r.contains("cache_dir")) {
            c.remote.cache_dir = std::filesystem::path(r.at("cache_dir").get<std::string>());
        }
    }
    if (j.contains("generation")) {
        const json& g = j.at("generation");
        get_if(g, "model_id", c.generation.model_id);
        get_if(g, "temperature", c.generation.temperature);
        get_if(g, "max_tokens", c.generation.max_tokens);
        get_if(g, "top_p", c.generation.top_p);
        get_if(g, "frequency_penalty", c.generation.frequency_penalty);
        get_if(g, "presence_penalty", c.generation.presence_penalty);
        get_if(g, "samples_per_problem", c.samples_per_problem);
    }
    get_if(j, "embedding_dim", c.embedding_dim);
    get_if(j, "audit_fraction", c.audit_fraction);

    if (j.contains("k_selection")) {
        const json& k = j.at("k_selection");
        get_if(k, "k_min", c.select_k.k_min);
        get_if(k, "k_max", c.select_k.k_max);
        get_if(k, "gap_references", c.select_k.gap_references);
        get_if(k, "dbi_neighborhood", c.select_k.dbi_neighborhood);
        get_if(k, "stability_runs", c.select_k.stability_runs);
        get_if(k, "stability_quorum", c.select_k.stability_quorum);
        get_if(k, "n_init", c.select_k.kmeans.n_init);
        get_if(k, "max_iter", c.select_k.kmeans.max_iter);
        get_if(k, "tol", c.select_k.kmeans.tol);
        get_if(k, "normalize_inputs", c.select_k.kmeans.normalize_inputs);
        if (k.contains("fixed_k")) c.fixed_k = k.at("fixed_k").get<int>();
    }
    if (j.contains("eap")) {
        const json& e = j.at("eap");
        get_if(e, "theta", c.eap.theta);
        get_if(e, "max_summaries", c.eap.max_summaries);
        if (e.contains("knowledge_embedder")) {
            c.eap.knowledge_embedder =
                embedder_from_string(e.at("knowledge_embedder").get<std::string>());
        }
    }

    // Relative input paths resolve against the config file's directory so a
    // config can sit next to its data; out_dir stays relative to the cwd.
    const std::filesystem::path base = path.parent_path();
    auto resolve = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) p = base / p;
    };
    resolve(c.problems_path);
    resolve(c.solutions_path);
    resolve(c.prompt_dir);
    return c;
}

nlohmann::json config_to_json(const Config& c) {
    json j;
    j["seed"] = c.seed;
    j["offline"] = c.offline;
    j["out_dir"] = c.out_dir.generic_string();
    j["problems_path"] = c.problems_path.generic_string();
    j["solutions_path"] = c.solutions_path.generic_string();
    j["dataset_kind"] = c.dataset_kind;
    j["prompt_dir"] = c.prompt_dir.generic_string();
    j["models"] = {{"solver", c.models.solver},
                   {"analyzer", c.models.analyzer},
                   {"checker", c.models.checker},
                   {"labeler", c.models.labeler},
                   {"embedding", c.models.embedding}};
    j["remote"] = {{"base_url", c.remote.base_url},
                   {"api_key_env", c.remote.api_key_env},
                   {"completions_path", c.remote.completions_path},
                   {"embeddings_path", c.remote.embeddings_path},
                   {"embedding_model", c.remote.embedding_model},
                   {"embedding_dim", c.remote.embedding_dim},
                   {"embed_batch_size", c.remote.embed_batch_size},
                   {"max_attempts", c.remote.retry.max_attempts},
                   {"backoff_base_ms", c.remote.retry.backoff_base_ms},
                   {"backoff_factor", c.remote.retry.backoff_factor}};
    if (c.remote.cache_dir) j["remote"]["cache_dir"] = c.remote.cache_dir->generic_string();
    j["generation"] = {{"model_id", c.generation.model_id},
                       {"temperature", c.generation.temperature},
                       {"max_tokens", c.generation.max_tokens},
                       {"top_p", c.generation.top_p},
                       {"frequency_penalty", c.generation.frequency_penalty},
                       {"presence_penalty", c.generation.presence_penalty},
                       {"samples_per_problem", c.samples_per_problem}};
    j["embedding_dim"] = c.embedding_dim;
    j["audit_fraction"] = c.audit_fraction;
    j["k_selection"] = {{"k_min", c.select_k.k_min},
                        {"k_max", c.select_k.k_max},
                        {"gap_references", c.select_k.gap_references},
                        {"dbi_neighborhood", c.select_k.dbi_neighborhood},
                        {"stability_runs", c.select_k.stability_runs},
                        {"stability_quorum", c.select_k.stability_quorum},
                        {"n_init", c.select_k.kmeans.n_init},
                        {"max_iter", c.select_k.kmeans.max_iter},
                        {"tol", c.select_k.kmeans.tol},
                        {"normalize_inputs", c.select_k.kmeans.normalize_inputs}};
    if (c.fixed_k) j["k_selection"]["fixed_k"] = *c.fixed_k;
    j["eap"] = {{"theta", c.eap.theta},
                {"max_summaries", c.eap.max_summaries},
                {"knowledge_embedder", embedder_to_string(c.eap.knowledge_embedder)}};
    return j;
}

std::string config_hash(const Config& config) {
    json j = config_to_json(config);
    j.erase("seed");
    j.erase("out_dir");
    std::uint64_t h = rng::fnv1a(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace errtax
