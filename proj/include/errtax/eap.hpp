#pragma once

// Error-aware prompting: label a question with knowledge points, retrieve
// error summaries whose embeddings are similar to those labels, and prepend
// the summaries to the prompt. Includes the static correct/incorrect
// few-shot baseline it is compared against.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "errtax/clients.hpp"
#include "errtax/clustering.hpp"
#include "errtax/corpus.hpp"
#include "errtax/prompts.hpp"

namespace errtax::eap {

enum class Embedder { model_embedding, tfidf };

struct EapConfig {
    double theta = 0.3;
    int max_summaries = 5;
    Embedder knowledge_embedder = Embedder::tfidf;
};

inline constexpr int kMaxKnowledgeLabels = 5;

// Fixed preamble that introduces retrieved summaries in the prompt.
inline constexpr std::string_view kSummaryPreamble =
    "Common errors on related problems — avoid them:";

struct Retrieved {
    std::string summary;
    std::string matched_label;
    double score = 0.0;
};

struct EapResult {
    std::string question;
    std::vector<std::string> knowledge_labels;
    std::vector<Retrieved> retrieved;
    std::string prompt;
    std::optional<std::string> response;
    std::vector<std::string> warnings;
};

struct LabelingResult {
    std::vector<std::string> labels;
    std::vector<std::string> warnings;
};

// 1-5 short concept labels for the question, one per line from the model; a
// dataset-provided knowledge route (segments separated by ">") short-circuits
// the model call when given.
LabelingResult label_knowledge_points(const std::string& question,
                                      clients::CompletionClient& client,
                                      const prompts::PromptTemplate& tmpl,
                                      const std::optional<std::string>& knowledge_route = {},
                                      const clients::CompletionParams& params = {});

// Classic tf-idf with idf = ln((1+N)/(1+df)) + 1 over a lowercase
// whitespace/punctuation tokenization; vocabulary sorted, rows L2-normalized.
std::vector<clustering::Vector> tfidf_embed(const std::vector<std::string>& texts,
                                            const std::vector<std::string>& fit_corpus);

// Retrieval core over prepared vectors: scores every (label, summary) pair
// by cosine similarity, keeps scores >= theta (boundary inclusive),
// deduplicates summaries keeping the best score, sorts by descending score
// (ties by summary text), and truncates to max_summaries. Zero vectors on
// either side never match.
std::vector<Retrieved> retrieve_summaries(const std::vector<std::string>& labels,
                                          const std::vector<clustering::Vector>& label_vectors,
                                          const std::vector<std::string>& summaries,
                                          const std::vector<clustering::Vector>& summary_vectors,
                                          const EapConfig& cfg);

// Convenience overload against a labeled cluster model: summaries are the
// taxonomy labels, embedded together with the knowledge labels by the
// configured embedder.
using EmbedFn = std::function<std::vector<clustering::Vector>(const std::vector<std::string>&)>;

std::vector<Retrieved> retrieve_summaries(const std::vector<std::string>& labels,
                                          const clustering::ClusterModel& model,
                                          const EapConfig& cfg, const EmbedFn& embed);

std::string build_prompt(const std::string& question, const std::vector<Retrieved>& retrieved);

struct StaticExemplar {
    std::string problem;
    std::string correct;
    std::string incorrect;
};

// The static error-example baseline: Question/Correct/Incorrect triples
// followed by the test question and an open "Correct:" slot.
std::string build_static_error_prompt(const std::string& question,
                                      const std::vector<StaticExemplar>& exemplars);

struct EapClients {
    clients::CompletionClient* labeler = nullptr;
    clients::CompletionClient* solver = nullptr;
    clients::EmbeddingClient* embedder = nullptr;  // used in model_embedding mode
};

EapResult answer_with_eap(const std::string& question, const clustering::ClusterModel& model,
                          const EapConfig& cfg, const EapClients& deps,
                          const prompts::PromptTemplate& knowledge_tmpl,
                          const std::optional<std::string>& knowledge_route = {},
                          const clients::CompletionParams& params = {});

// Thin self-consistency baseline: sample the plain CoT prompt n times and
// majority-vote the extracted answers (ties broken by first appearance).
std::string self_consistency_answer(const std::string& question, int n,
                                    clients::CompletionClient& client,
                                    corpus::AnswerFormat format = corpus::AnswerFormat::numeric,
                                    const clients::CompletionParams& params = {});

}  // namespace errtax::eap
