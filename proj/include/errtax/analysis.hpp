#pragma once

// Error analysis: turns an erroneous solution into a detailed explanation
// plus short abstract error reasons, judges whether flagged solutions are
// merely format deviations, and provides the fixed 9-type baseline
// classifier.

#include <filesystem>
#include <string>
#include <vector>

#include "errtax/clients.hpp"
#include "errtax/corpus.hpp"
#include "errtax/prompts.hpp"

namespace errtax::analysis {

struct ErrorAnalysis {
    std::string sample_id;
    std::string detailed_explanation;
    std::vector<std::string> abstract_reasons;
    bool is_right_verdict = false;
    std::vector<std::string> warnings;
};

bool operator==(const ErrorAnalysis& a, const ErrorAnalysis& b);

// Reason-count and reason-length limits from the analyzer instructions.
// Violations warn, they do not reject: real model outputs exceed both.
inline constexpr int kSoftMaxReasons = 4;
inline constexpr int kSoftMaxReasonWords = 15;
inline constexpr const char* kRightMarker = "Solution is right.";

// Splits the detailed explanation from the trailing numbered reason list.
// The list is the block starting at the last line of the form "1. text"
// whose following nonempty lines continue the numbering. Raw text with
// neither a list nor the rightness marker fails to parse.
ErrorAnalysis parse_analysis(const std::string& raw, const std::string& sample_id);

// Inverse of parse_analysis for round-trip checks and readable exports.
std::string render_analysis(const ErrorAnalysis& analysis);

ErrorAnalysis analyze_error(const corpus::ErrorSample& sample, clients::CompletionClient& client,
                            const prompts::PromptTemplate& tmpl,
                            const clients::CompletionParams& params = {});

struct ParseFailure {
    std::string sample_id;
    std::string raw;
    std::string message;
};

struct AnalysisBatch {
    std::vector<ErrorAnalysis> analyses;
    std::vector<ParseFailure> failures;
};

AnalysisBatch analyze_all(const std::vector<corpus::ErrorSample>& samples,
                          clients::CompletionClient& client, const prompts::PromptTemplate& tmpl,
                          const clients::CompletionParams& params = {});

enum class Judgement { right, wrong };

struct CheckerVerdict {
    Judgement judgement = Judgement::wrong;
    std::string rationale;
};

// Judges only whether the solution's final step is semantically equal to the
// gold answer, ignoring format differences.
CheckerVerdict check_solution_validity(const corpus::ErrorSample& sample,
                                       clients::CompletionClient& client,
                                       const prompts::PromptTemplate& tmpl,
                                       const clients::CompletionParams& params = {});

// Adapts the checker into the predicate corpus::apply_checker_filter expects.
corpus::SolutionChecker make_checker(clients::CompletionClient& client,
                                     const prompts::PromptTemplate& tmpl,
                                     const clients::CompletionParams& params = {});

enum class StaticCode { CA, CO, UC, CV, HA, OP, FC, MS, CS };

inline constexpr int kStaticCodeCount = 9;

std::string to_string(StaticCode code);
StaticCode static_code_from_string(const std::string& s);

struct StaticErrorType {
    StaticCode code = StaticCode::CA;
};

// Parses the "(XX)" code from a classifier response.
StaticErrorType parse_static_classification(const std::string& raw);

StaticErrorType classify_static(const corpus::ErrorSample& sample,
                                clients::CompletionClient& client,
                                const prompts::PromptTemplate& tmpl,
                                const clients::CompletionParams& params = {});

void write_analyses(const std::filesystem::path& path, const AnalysisBatch& batch);
AnalysisBatch read_analyses(const std::filesystem::path& path);

}  // namespace errtax::analysis
