#include "errtax/eap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "errtax/corpus.hpp"
#include "errtax/errors.hpp"

namespace errtax::eap {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

double safe_cosine(const clustering::Vector& u, const clustering::Vector& v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        dot += u[d] * v[d];
        nu += u[d] * u[d];
        nv += v[d] * v[d];
    }
    if (nu == 0.0 || nv == 0.0) return -1.0;  // zero vectors never match
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

LabelingResult label_knowledge_points(const std::string& question,
                                      clients::CompletionClient& client,
                                      const prompts::PromptTemplate& tmpl,
                                      const std::optional<std::string>& knowledge_route,
                                      const clients::CompletionParams& params) {
    if (trim(question).empty()) throw Error("cannot label an empty question");
    LabelingResult result;

    if (knowledge_route && !trim(*knowledge_route).empty()) {
        // Dataset-provided route: segments become the labels directly.
        std::string segment;
        std::istringstream in(*knowledge_route);
        while (std::getline(in, segment, '>')) {
            segment = trim(segment);
            if (!segment.empty()) result.labels.push_back(segment);
        }
        if (!result.labels.empty()) {
            if (result.labels.size() > kMaxKnowledgeLabels) {
                result.warnings.push_back("knowledge route has more than " +
                                          std::to_string(kMaxKnowledgeLabels) +
                                          " segments; keeping the first " +
                                          std::to_string(kMaxKnowledgeLabels));
                result.labels.resize(kMaxKnowledgeLabels);
            }
            return result;
        }
    }

    std::string raw = client.complete(tmpl.fill({{"question", question}}), params);
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        line = trim(line);
        if (line.rfind("- ", 0) == 0) line = trim(line.substr(2));
        if (!line.empty()) result.labels.push_back(line);
    }
    if (result.labels.empty()) {
        throw ParseError("knowledge point labeling produced no labels: " + raw);
    }
    if (result.labels.size() > kMaxKnowledgeLabels) {
        result.warnings.push_back("model emitted " + std::to_string(result.labels.size()) +
                                  " labels; keeping the first " +
                                  std::to_string(kMaxKnowledgeLabels));
        result.labels.resize(kMaxKnowledgeLabels);
    }
    return result;
}

std::vector<clustering::Vector> tfidf_embed(const std::vector<std::string>& texts,
                                            const std::vector<std::string>& fit_corpus) {
    if (fit_corpus.empty()) throw Error("tf-idf fit corpus must be nonempty");

    std::vector<std::vector<std::string>> corpus_tokens;
    corpus_tokens.reserve(fit_corpus.size());
    bool any_tokens = false;
    for (const auto& doc : fit_corpus) {
        corpus_tokens.push_back(tokenize(doc));
        any_tokens = any_tokens || !corpus_tokens.back().empty();
    }
    if (!any_tokens) throw Error("tf-idf fit corpus contains no tokens");

    // Sorted vocabulary fixes column order.
    std::set<std::string> vocab_set;
    for (const auto& tokens : corpus_tokens) vocab_set.insert(tokens.begin(), tokens.end());
    std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < vocab.size(); ++i) column[vocab[i]] = i;

    std::vector<double> idf(vocab.size(), 0.0);
    const double n_docs = static_cast<double>(fit_corpus.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        double df = 0.0;
        for (const auto& tokens : corpus_tokens) {
            if (std::find(tokens.begin(), tokens.end(), vocab[i]) != tokens.end()) df += 1.0;
        }
        idf[i] = std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
    }

    std::vector<clustering::Vector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        clustering::Vector row(vocab.size(), 0.0);
        for (const auto& token : tokenize(text)) {
            auto it = column.find(token);
            if (it == column.end()) continue;  // unseen term: zero column
            row[it->second] += idf[it->second];
        }
        double norm = 0.0;
        for (double x : row) norm += x * x;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& x : row) x /= norm;
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<Retrieved> retrieve_summaries(const std::vector<std::string>& labels,
                                          const std::vector<clustering::Vector>& label_vectors,
                                          const std::vector<std::string>& summaries,
                                          const std::vector<clustering::Vector>& summary_vectors,
                                          const EapConfig& cfg) {
    if (labels.size() != label_vectors.size() || summaries.size() != summary_vectors.size()) {
        throw Error("retrieval inputs misaligned");
    }
    if (cfg.theta < 0.0 || cfg.theta > 1.0) throw Error("theta must lie in [0, 1]");
    if (cfg.max_summaries < 1) throw Error("max_summaries must be >= 1");

    // Best score per distinct summary text across all labels.
    std::map<std::string, Retrieved> best;
    for (std::size_t s = 0; s < summaries.size(); ++s) {
        for (std::size_t l = 0; l < labels.size(); ++l) {
            double score = safe_cosine(label_vectors[l], summary_vectors[s]);
            if (score < cfg.theta) continue;
            auto it = best.find(summaries[s]);
            if (it == best.end() || score > it->second.score) {
                best[summaries[s]] = Retrieved{summaries[s], labels[l], score};
            }
        }
    }

    std::vector<Retrieved> out;
    out.reserve(best.size());
    for (auto& [_, r] : best) out.push_back(std::move(r));
    std::sort(out.begin(), out.end(), [](const Retrieved& a, const Retrieved& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.summary < b.summary;
    });
    if (out.size() > static_cast<std::size_t>(cfg.max_summaries)) {
        out.resize(static_cast<std::size_t>(cfg.max_summaries));
    }
    return out;
}

std::vector<Retrieved> retrieve_summaries(const std::vector<std::string>& labels,
                                          const clustering::ClusterModel& model,
                                          const EapConfig& cfg, const EmbedFn& embed) {
    if (model.taxonomy_labels.empty()) {
        throw Error("cluster model has no taxonomy labels to retrieve from");
    }
    // One embedding call over summaries followed by labels keeps both in the
    // same space for the tf-idf embedder.
    std::vector<std::string> all = model.taxonomy_labels;
    all.insert(all.end(), labels.begin(), labels.end());
    std::vector<clustering::Vector> vectors = embed(all);
    if (vectors.size() != all.size()) throw Error("embedder returned wrong count");

    std::vector<clustering::Vector> summary_vectors(
        vectors.begin(), vectors.begin() + static_cast<std::ptrdiff_t>(model.taxonomy_labels.size()));
    std::vector<clustering::Vector> label_vectors(
        vectors.begin() + static_cast<std::ptrdiff_t>(model.taxonomy_labels.size()), vectors.end());
    return retrieve_summaries(labels, label_vectors, model.taxonomy_labels, summary_vectors, cfg);
}

std::string build_prompt(const std::string& question, const std::vector<Retrieved>& retrieved) {
    if (retrieved.empty()) return prompts::cot_prompt(question);
    std::ostringstream os;
    os << kSummaryPreamble << "\n";
    for (const auto& r : retrieved) os << "- " << r.summary << "\n";
    os << "\n" << prompts::cot_prompt(question);
    return os.str();
}

std::string build_static_error_prompt(const std::string& question,
                                      const std::vector<StaticExemplar>& exemplars) {
    if (exemplars.empty()) throw Error("static error prompt needs at least one exemplar");
    std::ostringstream os;
    for (const auto& e : exemplars) {
        os << "Question: " << e.problem << "\n"
           << "Correct: " << e.correct << "\n"
           << "Incorrect: " << e.incorrect << "\n\n";
    }
    os << "Question: " << question << "\n" << "Correct:";
    return os.str();
}

EapResult answer_with_eap(const std::string& question, const clustering::ClusterModel& model,
                          const EapConfig& cfg, const EapClients& deps,
                          const prompts::PromptTemplate& knowledge_tmpl,
                          const std::optional<std::string>& knowledge_route,
                          const clients::CompletionParams& params) {
    if (!deps.labeler || !deps.solver) throw Error("EAP requires labeler and solver clients");
    if (cfg.knowledge_embedder == Embedder::model_embedding && !deps.embedder) {
        throw Error("model_embedding mode requires an embedding client");
    }

    EapResult result;
    result.question = question;

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(std::string(name) + ": " + e.what());
        }
    };

    LabelingResult labeling = stage("label", [&] {
        return label_knowledge_points(question, *deps.labeler, knowledge_tmpl, knowledge_route,
                                      params);
    });
    result.knowledge_labels = labeling.labels;
    result.warnings = labeling.warnings;

    EmbedFn embed;
    if (cfg.knowledge_embedder == Embedder::tfidf) {
        // Summaries are the fit corpus; labels project into their space.
        std::vector<std::string> corpus = model.taxonomy_labels;
        embed = [corpus](const std::vector<std::string>& texts) {
            return tfidf_embed(texts, corpus);
        };
    } else {
        clients::EmbeddingClient* client = deps.embedder;
        embed = [client](const std::vector<std::string>& texts) { return client->embed(texts); };
    }

    result.retrieved = stage(
        "retrieve", [&] { return retrieve_summaries(result.knowledge_labels, model, cfg, embed); });
    result.prompt = build_prompt(question, result.retrieved);
    result.response = stage("solve", [&] { return deps.solver->complete(result.prompt, params); });
    return result;
}

std::string self_consistency_answer(const std::string& question, int n,
                                    clients::CompletionClient& client,
                                    corpus::AnswerFormat format,
                                    const clients::CompletionParams& params) {
    if (n < 1) throw Error("self-consistency needs n >= 1 samples");
    std::vector<std::string> answers;
    answers.reserve(static_cast<std::size_t>(n));
    const std::string prompt = prompts::cot_prompt(question);
    for (int i = 0; i < n; ++i) {
        auto extracted = corpus::extract_answer(client.complete(prompt, params), format);
        answers.push_back(extracted.value_or(""));
    }
    std::string winner = answers.front();
    std::size_t winner_votes = 0;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        std::size_t votes = 0;
        for (const auto& a : answers) {
            if (a == answers[i]) ++votes;
        }
        if (votes > winner_votes) {
            winner = answers[i];
            winner_votes = votes;
        }
    }
    return winner;
}

}  // namespace errtax::eap
