#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "errtax/clients.hpp"
#include "errtax/errors.hpp"
#include "errtax/rng.hpp"

namespace errtax::clients {

namespace {

std::string cache_key(const std::string& path, const nlohmann::json& body) {
    std::uint64_t h = rng::fnv1a(body.dump());
    h = rng::fnv1a(path, h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::optional<nlohmann::json> cache_load(const std::optional<std::filesystem::path>& dir,
                                         const std::string& key) {
    if (!dir) return std::nullopt;
    std::filesystem::path file = *dir / (key + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json body = nlohmann::json::parse(in, nullptr, false);
    if (body.is_discarded() || !body.contains("response")) return std::nullopt;
    return body["response"];
}

void cache_store(const std::optional<std::filesystem::path>& dir, const std::string& key,
                 const nlohmann::json& request, const nlohmann::json& response) {
    if (!dir) return;
    std::filesystem::create_directories(*dir);
    std::filesystem::path file = *dir / (key + ".json");
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << nlohmann::json{{"request", request}, {"response", response}}.dump() << "\n";
}

// POSTs the body, retrying transient failures (connection errors, 5xx, 429)
// with exponential backoff. Authorization failures and other client errors
// are permanent and surface immediately.
nlohmann::json post_json(const RemoteConfig& config, const std::string& path,
                         const nlohmann::json& body) {
    std::string key = cache_key(path, body);
    if (auto cached = cache_load(config.cache_dir, key)) return *cached;

    httplib::Client http(config.base_url);
    http.set_connection_timeout(30);
    http.set_read_timeout(120);
    httplib::Headers headers;
    if (const char* api_key = std::getenv(config.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + api_key);
    }

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            double delay = config.retry.backoff_base_ms *
                           std::pow(config.retry.backoff_factor, attempt - 2);
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay)));
        }
        auto res = http.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw AuthorizationError("backend rejected credentials (HTTP " +
                                     std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("backend returned HTTP " + std::to_string(res->status) + ": " +
                                 res->body);
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            throw ResponseShapeError("backend returned non-JSON body");
        }
        cache_store(config.cache_dir, key, body, parsed);
        return parsed;
    }
    throw TransportError("request failed after " + std::to_string(config.retry.max_attempts) +
                         " attempts; last error: " + last_error);
}

}  // namespace

RemoteCompletionClient::RemoteCompletionClient(RemoteConfig config) : config_(std::move(config)) {}

std::string RemoteCompletionClient::complete(const std::string& prompt,
                                             const CompletionParams& params) {
    validate(params);
    nlohmann::json body{{"model", params.model_id},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", prompt}}})},
                        {"temperature", params.temperature},
                        {"max_tokens", params.max_tokens},
                        {"top_p", params.top_p},
                        {"frequency_penalty", params.frequency_penalty},
                        {"presence_penalty", params.presence_penalty}};
    nlohmann::json response = post_json(config_, config_.completions_path, body);
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty()) {
        throw ResponseShapeError("completion response has no choices");
    }
    const auto& first = response["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw ResponseShapeError("completion response missing message content");
    }
    return first["message"]["content"].get<std::string>();
}

RemoteEmbeddingClient::RemoteEmbeddingClient(RemoteConfig config) : config_(std::move(config)) {}

std::vector<EmbeddingVector> RemoteEmbeddingClient::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size();
         start += static_cast<std::size_t>(config_.embed_batch_size)) {
        std::size_t end =
            std::min(texts.size(), start + static_cast<std::size_t>(config_.embed_batch_size));
        nlohmann::json input = nlohmann::json::array();
        for (std::size_t i = start; i < end; ++i) {
            if (texts[i].empty()) throw Error("cannot embed empty text");
            input.push_back(texts[i]);
        }
        nlohmann::json body{{"model", config_.embedding_model},
                            {"input", input},
                            {"dimensions", config_.embedding_dim}};
        nlohmann::json response = post_json(config_, config_.embeddings_path, body);
        if (!response.contains("data") || !response["data"].is_array() ||
            response["data"].size() != end - start) {
            throw ResponseShapeError("embedding response size mismatch");
        }
        std::vector<EmbeddingVector> batch(end - start);
        std::size_t fallback_index = 0;
        for (const auto& item : response["data"]) {
            if (!item.contains("embedding") || !item["embedding"].is_array()) {
                throw ResponseShapeError("embedding response missing vector");
            }
            std::size_t index = item.contains("index") && item["index"].is_number_unsigned()
                                    ? item["index"].get<std::size_t>()
                                    : fallback_index;
            if (index >= batch.size()) throw ResponseShapeError("embedding index out of range");
            EmbeddingVector v = item["embedding"].get<EmbeddingVector>();
            if (static_cast<int>(v.size()) != config_.embedding_dim) {
                throw ResponseShapeError("embedding dimension mismatch");
            }
            batch[index] = std::move(v);
            ++fallback_index;
        }
        for (auto& v : batch) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace errtax::clients
