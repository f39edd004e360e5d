// Command-line driver for the error-taxonomy pipeline. Each pipeline stage
// is exposed as a subcommand that runs unconditionally; `pipeline` chains
// them all with freshness skipping. `eap-augment` answers questions with
// error-aware prompts against a labeled cluster model, and
// `eval-consistency` scores repeated-classification stability.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "errtax/clients.hpp"
#include "errtax/config.hpp"
#include "errtax/eap.hpp"
#include "errtax/errors.hpp"
#include "errtax/jsonl.hpp"
#include "errtax/pipeline.hpp"
#include "errtax/prompts.hpp"
#include "errtax/reporting.hpp"
#include "errtax/rng.hpp"

namespace {

using nlohmann::json;

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool offline = false;
    std::string out_dir;
};

errtax::Config make_config(const GlobalFlags& flags) {
    errtax::Config config;
    if (!flags.config_path.empty()) config = errtax::load_config(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.offline) config.offline = true;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    return config;
}

void print_stage(const errtax::pipeline::StageStatus& status) {
    std::cout << (status.skipped ? "skipped " : "ran     ") << status.name << "\n";
}

int run_eap_augment(const errtax::Config& config, const std::string& model_file,
                    const std::string& questions_file, const std::string& output_file) {
    auto model = errtax::clustering::read_cluster_model(
        model_file.empty() ? errtax::pipeline::artifact_path(config, "labeled_model.json")
                           : std::filesystem::path(model_file));

    std::unique_ptr<errtax::clients::CompletionClient> labeler;
    std::unique_ptr<errtax::clients::CompletionClient> solver;
    std::unique_ptr<errtax::clients::EmbeddingClient> embedder;
    if (config.offline) {
        labeler = std::make_unique<errtax::clients::OfflineCompletionClient>(
            errtax::rng::derive_seed(config.seed, 0xE1));
        solver = std::make_unique<errtax::clients::OfflineCompletionClient>(
            errtax::rng::derive_seed(config.seed, 0xE2));
        embedder = std::make_unique<errtax::clients::MockEmbeddingClient>(
            config.embedding_dim, errtax::rng::derive_seed(config.seed, 0xE3));
    } else {
        labeler = std::make_unique<errtax::clients::RemoteCompletionClient>(config.remote);
        solver = std::make_unique<errtax::clients::RemoteCompletionClient>(config.remote);
        embedder = std::make_unique<errtax::clients::RemoteEmbeddingClient>(config.remote);
    }
    errtax::eap::EapClients deps{labeler.get(), solver.get(), embedder.get()};

    auto prompt_dir = config.prompt_dir.empty() ? errtax::prompts::default_prompt_dir()
                                                : config.prompt_dir;
    auto knowledge_tmpl =
        errtax::prompts::load_asset(prompt_dir, errtax::prompts::kKnowledgePointsAsset);

    std::filesystem::create_directories(config.out_dir);
    errtax::jsonl::Writer writer(output_file.empty()
                                     ? errtax::pipeline::artifact_path(config, "eap_results.jsonl")
                                     : std::filesystem::path(output_file));

    errtax::jsonl::for_each_record(questions_file, [&](const json& record, std::size_t) {
        std::optional<std::string> route;
        if (record.contains("knowledge_route")) {
            route = record.at("knowledge_route").get<std::string>();
        }
        auto result = errtax::eap::answer_with_eap(record.at("question").get<std::string>(), model,
                                                   config.eap, deps, knowledge_tmpl, route);
        json retrieved = json::array();
        for (const auto& r : result.retrieved) {
            retrieved.push_back(json{{"summary", r.summary},
                                     {"matched_label", r.matched_label},
                                     {"score", r.score}});
        }
        writer.write(json{{"id", record.value("id", "")},
                          {"question", result.question},
                          {"knowledge_labels", result.knowledge_labels},
                          {"retrieved", retrieved},
                          {"prompt", result.prompt},
                          {"response", result.response.value_or("")},
                          {"warnings", result.warnings}});
    });
    return 0;
}

int run_eval_consistency(const errtax::Config& config, const std::string& predictions_file,
                         int n_categories) {
    std::vector<errtax::reporting::LabeledItem> items;
    errtax::jsonl::for_each_record(predictions_file, [&](const json& record, std::size_t) {
        errtax::reporting::LabeledItem item;
        item.item_id = record.at("item_id").get<std::string>();
        item.predictions = record.at("predictions").get<std::vector<std::string>>();
        item.gold = record.at("gold").get<std::string>();
        items.push_back(std::move(item));
    });

    auto report = errtax::reporting::consistency_report(items, n_categories);
    std::filesystem::create_directories(config.out_dir);
    {
        std::ofstream out(errtax::pipeline::artifact_path(config, "consistency.csv"));
        out << errtax::reporting::to_csv(report);
    }
    {
        std::ofstream out(errtax::pipeline::artifact_path(config, "consistency.md"));
        out << errtax::reporting::to_markdown(report);
    }
    std::cout << "items: " << report.per_item.size()
              << "  accuracy: " << report.aggregate_accuracy
              << "  consistency: " << report.aggregate_consistency << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic error taxonomy and error-aware prompting for math word problems"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "JSON config file");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "run seed");
    app.add_flag("--offline", flags.offline, "use the built-in offline model stand-ins");
    app.add_option("--out", flags.out_dir, "artifact output directory");

    for (auto stage : errtax::pipeline::kStageOrder) {
        app.add_subcommand(std::string(stage), "run the " + std::string(stage) + " stage");
    }
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run all stages with freshness skipping");

    auto* eap_cmd = app.add_subcommand("eap-augment", "answer questions with error-aware prompts");
    std::string model_file;
    std::string questions_file;
    std::string output_file;
    eap_cmd->add_option("--model-file", model_file, "labeled cluster model JSON");
    eap_cmd->add_option("--questions", questions_file, "questions JSONL (id, question)")
        ->required();
    eap_cmd->add_option("--output", output_file, "result JSONL path");
    double theta = -1.0;
    int cap = -1;
    std::string embedder_name;
    eap_cmd->add_option("--theta", theta, "similarity threshold override");
    eap_cmd->add_option("--cap", cap, "max summaries override");
    eap_cmd->add_option("--embedder", embedder_name, "tfidf or model_embedding");

    auto* consistency_cmd =
        app.add_subcommand("eval-consistency", "score repeated classification stability");
    std::string predictions_file;
    int n_categories = errtax::reporting::kStaticCategoryCount;
    consistency_cmd
        ->add_option("--predictions", predictions_file,
                     "JSONL with item_id, predictions, gold fields")
        ->required();
    consistency_cmd->add_option("--n-categories", n_categories, "entropy normalization base");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) flags.seed = seed_value;

    try {
        errtax::Config config = make_config(flags);

        if (pipeline_cmd->parsed()) {
            auto result = errtax::pipeline::run_pipeline(config);
            for (const auto& status : result.stages) print_stage(status);
            return 0;
        }
        if (eap_cmd->parsed()) {
            if (theta >= 0.0) config.eap.theta = theta;
            if (cap > 0) config.eap.max_summaries = cap;
            if (embedder_name == "tfidf") {
                config.eap.knowledge_embedder = errtax::eap::Embedder::tfidf;
            } else if (embedder_name == "model_embedding") {
                config.eap.knowledge_embedder = errtax::eap::Embedder::model_embedding;
            } else if (!embedder_name.empty()) {
                throw errtax::Error("unknown embedder \"" + embedder_name + "\"");
            }
            return run_eap_augment(config, model_file, questions_file, output_file);
        }
        if (consistency_cmd->parsed()) {
            return run_eval_consistency(config, predictions_file, n_categories);
        }
        for (auto stage : errtax::pipeline::kStageOrder) {
            auto* cmd = app.get_subcommand(std::string(stage));
            if (cmd->parsed()) {
                print_stage(errtax::pipeline::run_stage(config, std::string(stage)));
                return 0;
            }
        }
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
