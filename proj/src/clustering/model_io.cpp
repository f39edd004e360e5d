#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errtax/clustering.hpp"
#include "errtax/errors.hpp"
#include "errtax/jsonl.hpp"

namespace errtax::clustering {

std::string label_cluster(const std::vector<std::string>& member_reasons,
                          clients::CompletionClient& client, const prompts::PromptTemplate& tmpl,
                          const clients::CompletionParams& params) {
    if (member_reasons.empty()) throw Error("cannot label an empty cluster");
    std::ostringstream bullets;
    for (const auto& reason : member_reasons) bullets << "- " << reason << "\n";
    std::string raw = client.complete(tmpl.fill({{"reasons", bullets.str()}}), params);

    // First nonempty line, capped at 12 words.
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream words(line);
        std::string word, label;
        int count = 0;
        while (words >> word && count < 12) {
            if (count > 0) label += " ";
            label += word;
            ++count;
        }
        if (!label.empty()) return label;
    }
    throw Error("cluster labeling returned no usable text");
}

void write_embeddings(const std::filesystem::path& path,
                      const std::vector<EmbeddedReason>& reasons) {
    jsonl::Writer writer(path);
    for (const auto& r : reasons) {
        writer.write(nlohmann::json{
            {"reason_id", r.reason_id}, {"text", r.text}, {"vector", r.vector}});
    }
}

std::vector<EmbeddedReason> read_embeddings(const std::filesystem::path& path) {
    std::vector<EmbeddedReason> out;
    jsonl::for_each_record(path, [&](const nlohmann::json& j, std::size_t line) {
        if (!j.contains("reason_id") || !j.contains("text") || !j.contains("vector")) {
            throw ParseError("embedding record missing fields in " + path.string(), line);
        }
        EmbeddedReason r;
        r.reason_id = j["reason_id"].get<std::string>();
        r.text = j["text"].get<std::string>();
        r.vector = j["vector"].get<Vector>();
        out.push_back(std::move(r));
    });
    return out;
}

void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& cluster : model.members) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& m : cluster) {
            row.push_back(nlohmann::json{
                {"reason_id", m.reason_id}, {"text", m.text}, {"vector_index", m.vector_index}});
        }
        members.push_back(std::move(row));
    }
    nlohmann::json j{{"k", model.k},
                     {"algorithm", to_string(model.algorithm)},
                     {"seed", model.seed},
                     {"centroids", model.centroids},
                     {"labels", model.labels},
                     {"assignments", model.assignments},
                     {"members", members},
                     {"taxonomy_labels", model.taxonomy_labels}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cluster model to " + path.string());
    out << j.dump(2) << "\n";
}

ClusterModel read_cluster_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read cluster model from " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed cluster model JSON in " + path.string());

    ClusterModel model;
    model.k = j.at("k").get<int>();
    model.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    model.seed = j.at("seed").get<std::uint64_t>();
    model.centroids = j.at("centroids").get<Vectors>();
    model.labels = j.at("labels").get<std::vector<int>>();
    if (j.contains("assignments")) {
        model.assignments = j["assignments"].get<std::map<std::string, int>>();
    }
    if (j.contains("members")) {
        for (const auto& row : j["members"]) {
            std::vector<Member> cluster;
            for (const auto& m : row) {
                cluster.push_back(Member{m.at("reason_id").get<std::string>(),
                                         m.at("text").get<std::string>(),
                                         m.at("vector_index").get<std::size_t>()});
            }
            model.members.push_back(std::move(cluster));
        }
    }
    if (j.contains("taxonomy_labels")) {
        model.taxonomy_labels = j["taxonomy_labels"].get<std::vector<std::string>>();
    }
    return model;
}

}  // namespace errtax::clustering
