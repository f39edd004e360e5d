#include "errtax/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "errtax/analysis.hpp"
#include "errtax/clients.hpp"
#include "errtax/clustering.hpp"
#include "errtax/corpus.hpp"
#include "errtax/eap.hpp"
#include "errtax/errors.hpp"
#include "errtax/jsonl.hpp"
#include "errtax/prompts.hpp"
#include "errtax/reporting.hpp"
#include "errtax/rng.hpp"

namespace errtax::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sub-seed streams: every stage draws randomness from its own lane so a
// change in one stage never shifts another stage's stream.
constexpr std::uint64_t kGenerateStream = 0x01;
constexpr std::uint64_t kCheckerStream = 0x02;
constexpr std::uint64_t kAuditStream = 0x03;
constexpr std::uint64_t kAnalyzeStream = 0x04;
constexpr std::uint64_t kEmbedStream = 0x05;
constexpr std::uint64_t kSelectKStream = 0x06;
constexpr std::uint64_t kClusterStream = 0x07;
constexpr std::uint64_t kLabelStream = 0x08;

fs::path prompt_dir_of(const Config& config) {
    return config.prompt_dir.empty() ? prompts::default_prompt_dir() : config.prompt_dir;
}

clients::CompletionParams params_for(const Config& config, const std::string& model_id) {
    clients::CompletionParams p = config.generation;
    p.model_id = model_id;
    return p;
}

// Pipeline artifacts carry their provenance: JSONL files as a leading
// header record, JSON documents as a "provenance" object, and text reports
// as a first-line comment.

json provenance_of(const Config& config) {
    return json{{"config_hash", config_hash(config)}, {"seed", config.seed}};
}

void prepend_jsonl_header(const fs::path& path, const Config& config, const std::string& name,
                          json extra = json::object()) {
    std::string body;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot reopen " + path.string());
        std::ostringstream os;
        os << in.rdbuf();
        body = os.str();
    }
    json header = extra;
    header[jsonl::kHeaderKey] = name;
    header["config_hash"] = config_hash(config);
    header["seed"] = config.seed;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot rewrite " + path.string());
    out << header.dump() << '\n' << body;
}

void stamp_json_document(const fs::path& path, const Config& config) {
    std::ifstream in(path);
    if (!in) throw Error("cannot reopen " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ParseError("artifact " + path.string() + " is not valid JSON");
    in.close();
    doc["provenance"] = provenance_of(config);
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << '\n';
}

void write_json_document(const fs::path& path, json doc, const Config& config) {
    doc["provenance"] = provenance_of(config);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << '\n';
}

std::string text_stamp(const Config& config) {
    return "config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed);
}

void write_text_artifact(const fs::path& path, const std::string& body, const Config& config) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    std::string ext = path.extension().string();
    if (ext == ".csv") {
        out << "# " << text_stamp(config) << "\n";
    } else {
        out << "<!-- " << text_stamp(config) << " -->\n";
    }
    out << body;
}

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

std::optional<Provenance> read_provenance(const fs::path& path) {
    std::string ext = path.extension().string();
    if (ext == ".jsonl") {
        auto header = jsonl::read_header(path);
        if (!header || !header->contains("config_hash") || !header->contains("seed")) {
            return std::nullopt;
        }
        return Provenance{header->at("config_hash").get<std::string>(),
                          header->at("seed").get<std::uint64_t>()};
    }
    if (ext == ".json") {
        std::ifstream in(path);
        if (!in) return std::nullopt;
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("provenance")) {
            return std::nullopt;
        }
        const json& p = doc.at("provenance");
        if (!p.contains("config_hash") || !p.contains("seed")) return std::nullopt;
        return Provenance{p.at("config_hash").get<std::string>(),
                          p.at("seed").get<std::uint64_t>()};
    }
    // Text reports: the stamp sits in a first-line comment.
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    auto hash_pos = line.find("config_hash=");
    auto seed_pos = line.find("seed=");
    if (hash_pos == std::string::npos || seed_pos == std::string::npos) return std::nullopt;
    std::string hash = line.substr(hash_pos + 12);
    hash = hash.substr(0, hash.find_first_of(" \t-"));
    std::string seed_str = line.substr(seed_pos + 5);
    seed_str = seed_str.substr(0, seed_str.find_first_of(" \t-"));
    try {
        return Provenance{hash, std::stoull(seed_str)};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct StageIo {
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
};

StageIo stage_io(const Config& config, std::string_view stage) {
    auto art = [&](std::string_view name) { return artifact_path(config, name); };
    if (stage == "ingest") {
        StageIo io{{config.problems_path}, {art("problems.jsonl")}};
        return io;
    }
    if (stage == "generate") {
        StageIo io{{art("problems.jsonl")}, {art("generated.jsonl")}};
        if (!config.solutions_path.empty()) io.inputs.push_back(config.solutions_path);
        return io;
    }
    if (stage == "filter") {
        return {{art("problems.jsonl"), art("generated.jsonl")},
                {art("errors.jsonl"), art("removed.jsonl"), art("audit.jsonl")}};
    }
    if (stage == "analyze") return {{art("errors.jsonl")}, {art("analyses.jsonl")}};
    if (stage == "embed") return {{art("analyses.jsonl")}, {art("embeddings.jsonl")}};
    if (stage == "select-k") return {{art("embeddings.jsonl")}, {art("k_selection.json")}};
    if (stage == "cluster") {
        return {{art("embeddings.jsonl"), art("k_selection.json")}, {art("cluster_model.json")}};
    }
    if (stage == "label") return {{art("cluster_model.json")}, {art("labeled_model.json")}};
    if (stage == "report") {
        return {{art("labeled_model.json"), art("errors.jsonl")},
                {art("report_distribution.csv"), art("report_distribution.md"),
                 art("report_distribution.svg"), art("summary.json")}};
    }
    throw Error("unknown pipeline stage \"" + std::string(stage) + "\"");
}

bool stage_fresh(const Config& config, std::string_view stage) {
    StageIo io = stage_io(config, stage);
    const std::string hash = config_hash(config);

    fs::file_time_type newest_input = fs::file_time_type::min();
    for (const auto& input : io.inputs) {
        if (!fs::exists(input)) return false;  // missing input: let the stage report it
        newest_input = std::max(newest_input, fs::last_write_time(input));
    }
    for (const auto& output : io.outputs) {
        if (!fs::exists(output)) return false;
        if (fs::last_write_time(output) < newest_input) return false;
        auto prov = read_provenance(output);
        if (!prov || prov->config_hash != hash || prov->seed != config.seed) return false;
    }
    return true;
}

// --- stage bodies ---

void stage_ingest(const Config& config) {
    if (config.problems_path.empty()) throw Error("config has no problems_path");
    auto problems = corpus::load_problems(config.problems_path, config.dataset_kind);
    fs::path out = artifact_path(config, "problems.jsonl");
    corpus::write_problems(out, problems);
    prepend_jsonl_header(out, config, "problems",
                         json{{"count", problems.size()}, {"dataset_kind", config.dataset_kind}});
}

void stage_generate(const Config& config) {
    auto problems = corpus::load_problems(artifact_path(config, "problems.jsonl"),
                                          config.dataset_kind);
    fs::path out = artifact_path(config, "generated.jsonl");

    if (!config.solutions_path.empty()) {
        // Pre-generated solutions stand in for the solver models.
        auto solutions = corpus::load_solutions(config.solutions_path);
        corpus::write_solutions(out, solutions);
        prepend_jsonl_header(out, config, "generated",
                             json{{"count", solutions.size()}, {"source", "ingested"}});
        return;
    }

    std::unique_ptr<clients::CompletionClient> client;
    if (config.offline) {
        client = std::make_unique<clients::OfflineCompletionClient>(
            rng::derive_seed(config.seed, kGenerateStream));
    } else {
        client = std::make_unique<clients::RemoteCompletionClient>(config.remote);
    }

    std::vector<corpus::SolutionSample> samples;
    json failures = json::array();
    for (const auto& problem : problems) {
        auto result = clients::generate_solutions(problem, config.models.solver,
                                                  config.samples_per_problem, *client,
                                                  params_for(config, config.models.solver));
        samples.insert(samples.end(), result.samples.begin(), result.samples.end());
        for (const auto& f : result.failures) {
            failures.push_back(json{{"problem_id", problem.id},
                                    {"sample_index", f.sample_index},
                                    {"message", f.message}});
        }
    }
    corpus::write_solutions(out, samples);
    prepend_jsonl_header(out, config, "generated",
                         json{{"count", samples.size()}, {"failures", failures}});
}

void stage_filter(const Config& config) {
    auto problems = corpus::load_problems(artifact_path(config, "problems.jsonl"),
                                          config.dataset_kind);
    auto solutions = corpus::load_solutions(artifact_path(config, "generated.jsonl"));
    auto candidates = corpus::build_error_candidates(solutions, problems);

    std::unique_ptr<clients::CompletionClient> client;
    if (config.offline) {
        client = std::make_unique<clients::OfflineCompletionClient>(
            rng::derive_seed(config.seed, kCheckerStream));
    } else {
        client = std::make_unique<clients::RemoteCompletionClient>(config.remote);
    }
    auto tmpl = prompts::load_asset(prompt_dir_of(config), prompts::kCheckerAsset);
    auto checker =
        analysis::make_checker(*client, tmpl, params_for(config, config.models.checker));
    auto result = corpus::apply_checker_filter(candidates, checker);

    fs::path errors_path = artifact_path(config, "errors.jsonl");
    corpus::write_error_samples(errors_path, result.kept, corpus::Verdict::wrong_answer);
    json failures = json::array();
    for (const auto& f : result.failures) {
        failures.push_back(json{{"sample_id", f.sample_id}, {"message", f.message}});
    }
    prepend_jsonl_header(errors_path, config, "errors",
                         json{{"count", result.kept.size()},
                              {"candidates", candidates.size()},
                              {"checker_failures", failures}});

    fs::path removed_path = artifact_path(config, "removed.jsonl");
    corpus::write_error_samples(removed_path, result.removed, corpus::Verdict::format_deviation);
    prepend_jsonl_header(removed_path, config, "removed", json{{"count", result.removed.size()}});

    fs::path audit_path = artifact_path(config, "audit.jsonl");
    auto audit = corpus::sample_audit(result.kept, config.audit_fraction,
                                      rng::derive_seed(config.seed, kAuditStream));
    corpus::write_audit_samples(audit_path, audit);
    prepend_jsonl_header(audit_path, config, "audit",
                         json{{"count", audit.size()}, {"fraction", config.audit_fraction}});
}

void stage_analyze(const Config& config) {
    auto samples = corpus::read_error_samples(artifact_path(config, "errors.jsonl"));

    std::unique_ptr<clients::CompletionClient> client;
    if (config.offline) {
        client = std::make_unique<clients::OfflineCompletionClient>(
            rng::derive_seed(config.seed, kAnalyzeStream));
    } else {
        client = std::make_unique<clients::RemoteCompletionClient>(config.remote);
    }
    auto tmpl = prompts::load_asset(prompt_dir_of(config), prompts::kErrorAnalyzerAsset);
    auto batch =
        analysis::analyze_all(samples, *client, tmpl, params_for(config, config.models.analyzer));

    fs::path out = artifact_path(config, "analyses.jsonl");
    analysis::write_analyses(out, batch);
    prepend_jsonl_header(out, config, "analyses",
                         json{{"count", batch.analyses.size()},
                              {"parse_failures", batch.failures.size()}});
}

void stage_embed(const Config& config) {
    auto batch = analysis::read_analyses(artifact_path(config, "analyses.jsonl"));

    std::vector<clustering::EmbeddedReason> reasons;
    for (const auto& a : batch.analyses) {
        if (a.is_right_verdict) continue;
        for (std::size_t r = 0; r < a.abstract_reasons.size(); ++r) {
            clustering::EmbeddedReason reason;
            reason.reason_id = a.sample_id + "#r" + std::to_string(r);
            reason.text = a.abstract_reasons[r];
            reasons.push_back(std::move(reason));
        }
    }
    if (reasons.empty()) throw Error("no abstract reasons to embed");

    std::vector<std::string> texts;
    texts.reserve(reasons.size());
    for (const auto& r : reasons) texts.push_back(r.text);

    std::vector<clients::EmbeddingVector> vectors;
    if (config.offline) {
        clients::MockEmbeddingClient client(config.embedding_dim,
                                            rng::derive_seed(config.seed, kEmbedStream));
        vectors = client.embed(texts);
    } else {
        clients::RemoteConfig remote = config.remote;
        remote.embedding_model = config.models.embedding;
        remote.embedding_dim = config.embedding_dim;
        clients::RemoteEmbeddingClient client(remote);
        vectors = client.embed(texts);
    }
    for (std::size_t i = 0; i < reasons.size(); ++i) reasons[i].vector = std::move(vectors[i]);

    fs::path out = artifact_path(config, "embeddings.jsonl");
    clustering::write_embeddings(out, reasons);
    prepend_jsonl_header(out, config, "embeddings",
                         json{{"count", reasons.size()}, {"dim", config.embedding_dim}});
}

json gap_to_json(const clustering::GapStat& g) {
    return json{{"gap", g.gap},
                {"se", g.se},
                {"data_log_wcss", g.data_log_wcss},
                {"ref_log_wcss", g.ref_log_wcss}};
}

void stage_select_k(const Config& config) {
    fs::path out = artifact_path(config, "k_selection.json");
    if (config.fixed_k) {
        write_json_document(out, json{{"final_k", *config.fixed_k}, {"fixed", true},
                                      {"stable", true}},
                            config);
        return;
    }

    auto reasons = clustering::read_embeddings(artifact_path(config, "embeddings.jsonl"));
    clustering::Vectors vectors;
    vectors.reserve(reasons.size());
    for (auto& r : reasons) vectors.push_back(std::move(r.vector));

    clustering::SelectKConfig sk = config.select_k;
    sk.k_max = std::min<int>(sk.k_max, static_cast<int>(vectors.size()));
    auto report = clustering::select_k(vectors, rng::derive_seed(config.seed, kSelectKStream), sk);

    json wcss_curve = json::object();
    for (const auto& [k, w] : report.wcss_curve) wcss_curve[std::to_string(k)] = w;
    json gaps = json::object();
    for (const auto& [k, g] : report.gap_values) gaps[std::to_string(k)] = gap_to_json(g);
    json dbis = json::object();
    for (const auto& [k, d] : report.dbi_values) dbis[std::to_string(k)] = d;

    write_json_document(
        out,
        json{{"final_k", report.final_k},
             {"fixed", false},
             {"stable", report.stable},
             {"stability_runs", report.stability_runs},
             {"gap_choice", report.gap_choice},
             {"gap_fallback", report.gap_fallback},
             {"elbow_range",
              json::array({report.elbow_candidate_range.first,
                           report.elbow_candidate_range.second})},
             {"wcss_curve", wcss_curve},
             {"gap", gaps},
             {"dbi", dbis}},
        config);
}

void stage_cluster(const Config& config) {
    std::ifstream in(artifact_path(config, "k_selection.json"));
    if (!in) throw Error("cannot open k_selection.json");
    json selection = json::parse(in, nullptr, false);
    if (selection.is_discarded() || !selection.contains("final_k")) {
        throw ParseError("k_selection.json is corrupted");
    }
    int k = selection.at("final_k").get<int>();
    if (k < 1) throw Error("k_selection.json holds final_k < 1");

    auto reasons = clustering::read_embeddings(artifact_path(config, "embeddings.jsonl"));
    clustering::Vectors vectors;
    std::vector<std::string> reason_ids;
    std::vector<std::string> reason_texts;
    vectors.reserve(reasons.size());
    for (auto& r : reasons) {
        vectors.push_back(std::move(r.vector));
        reason_ids.push_back(r.reason_id);
        reason_texts.push_back(r.text);
    }

    auto model = clustering::kmeans(vectors, k, rng::derive_seed(config.seed, kClusterStream),
                                    config.select_k.kmeans);
    clustering::attach_members(model, reason_ids, reason_texts);

    fs::path out = artifact_path(config, "cluster_model.json");
    clustering::write_cluster_model(out, model);
    stamp_json_document(out, config);
}

void stage_label(const Config& config) {
    auto model = clustering::read_cluster_model(artifact_path(config, "cluster_model.json"));

    std::unique_ptr<clients::CompletionClient> client;
    if (config.offline) {
        client = std::make_unique<clients::OfflineCompletionClient>(
            rng::derive_seed(config.seed, kLabelStream));
    } else {
        client = std::make_unique<clients::RemoteCompletionClient>(config.remote);
    }
    auto tmpl = prompts::load_asset(prompt_dir_of(config), prompts::kClusterLabelAsset);
    auto params = params_for(config, config.models.labeler);

    model.taxonomy_labels.assign(static_cast<std::size_t>(model.k), "");
    for (int c = 0; c < model.k; ++c) {
        std::vector<std::string> texts;
        for (const auto& member : model.members[static_cast<std::size_t>(c)]) {
            texts.push_back(member.text);
        }
        model.taxonomy_labels[static_cast<std::size_t>(c)] =
            texts.empty() ? "(empty cluster)"
                          : clustering::label_cluster(texts, *client, tmpl, params);
    }

    fs::path out = artifact_path(config, "labeled_model.json");
    clustering::write_cluster_model(out, model);
    stamp_json_document(out, config);
}

// Reason ids are "<sample id>#r<index>"; recover the sample id.
std::string sample_id_of_reason(const std::string& reason_id) {
    auto pos = reason_id.rfind("#r");
    if (pos == std::string::npos) throw Error("malformed reason id \"" + reason_id + "\"");
    return reason_id.substr(0, pos);
}

void stage_report(const Config& config) {
    auto model = clustering::read_cluster_model(artifact_path(config, "labeled_model.json"));
    auto errors = corpus::read_error_samples(artifact_path(config, "errors.jsonl"));

    std::map<std::string, const corpus::ErrorSample*> by_id;
    for (const auto& e : errors) by_id[e.id] = &e;

    std::vector<reporting::ReasonMeta> meta(model.labels.size());
    std::vector<bool> covered(model.labels.size(), false);
    for (const auto& members : model.members) {
        for (const auto& member : members) {
            auto it = by_id.find(sample_id_of_reason(member.reason_id));
            if (it == by_id.end()) {
                throw Error("reason " + member.reason_id + " references unknown error sample");
            }
            meta[member.vector_index] = {it->second->source_model, it->second->source_dataset};
            covered[member.vector_index] = true;
        }
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
        throw Error("cluster model members do not cover every embedded reason");
    }

    auto report = reporting::distribution_report(model, meta);
    write_text_artifact(artifact_path(config, "report_distribution.csv"),
                        reporting::to_csv(report), config);
    write_text_artifact(artifact_path(config, "report_distribution.md"),
                        reporting::to_markdown(report), config);
    write_text_artifact(artifact_path(config, "report_distribution.svg"),
                        reporting::to_svg(report), config);

    json totals = json::object();
    for (std::size_t i = 0; i < report.model_names.size(); ++i) {
        totals[report.model_names[i]] = report.totals[i];
    }
    write_json_document(artifact_path(config, "summary.json"),
                        json{{"final_k", model.k},
                             {"categories", model.taxonomy_labels},
                             {"n_reasons", model.labels.size()},
                             {"n_errors", errors.size()},
                             {"totals_per_model", totals}},
                        config);
}

void run_stage_body(const Config& config, std::string_view stage) {
    if (stage == "ingest") stage_ingest(config);
    else if (stage == "generate") stage_generate(config);
    else if (stage == "filter") stage_filter(config);
    else if (stage == "analyze") stage_analyze(config);
    else if (stage == "embed") stage_embed(config);
    else if (stage == "select-k") stage_select_k(config);
    else if (stage == "cluster") stage_cluster(config);
    else if (stage == "label") stage_label(config);
    else if (stage == "report") stage_report(config);
    else throw Error("unknown pipeline stage \"" + std::string(stage) + "\"");
}

}  // namespace

fs::path artifact_path(const Config& config, std::string_view artifact) {
    return config.out_dir / fs::path(artifact);
}

StageStatus run_stage(const Config& config, const std::string& stage) {
    StageStatus status;
    status.name = stage;
    status.outputs = stage_io(config, stage).outputs;
    fs::create_directories(config.out_dir);
    try {
        run_stage_body(config, stage);
    } catch (const Error& e) {
        throw Error("stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error("stage " + stage + ": " + e.what());
    }
    return status;
}

PipelineResult run_pipeline(const Config& config) {
    PipelineResult result;
    for (std::string_view stage : kStageOrder) {
        std::string name(stage);
        if (stage_fresh(config, stage)) {
            StageStatus status;
            status.name = name;
            status.skipped = true;
            status.outputs = stage_io(config, stage).outputs;
            result.stages.push_back(std::move(status));
            continue;
        }
        result.stages.push_back(run_stage(config, name));
    }
    return result;
}

}  // namespace errtax::pipeline
