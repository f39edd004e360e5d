#pragma once

// Corpus construction: problem/solution ingestion, answer normalization and
// matching, error-candidate extraction, checker filtering, audit sampling.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace errtax::corpus {

enum class AnswerFormat { numeric, multiple_choice };

AnswerFormat answer_format_from_string(std::string_view s);
std::string to_string(AnswerFormat f);

struct ProblemRecord {
    std::string id;
    std::string dataset;
    std::string question;
    std::string gold_answer;
    AnswerFormat answer_format = AnswerFormat::numeric;
    std::optional<std::string> knowledge_point_route;
};

enum class Verdict { correct, wrong_answer, format_deviation, unchecked };

std::string to_string(Verdict v);

struct SolutionSample {
    std::string problem_id;
    std::string model_id;
    int sample_index = 0;
    std::string text;
    std::optional<std::string> extracted_answer;
    Verdict verdict = Verdict::unchecked;
};

// One (question, gold answer, erroneous solution) triplet.
struct ErrorSample {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string solution;
    std::string source_model;
    std::string source_dataset;
};

enum class AnswerKind { number, choice, text };

struct CanonicalAnswer {
    AnswerKind kind = AnswerKind::text;
    std::optional<double> numeric_value;
    std::optional<char> choice_letter;
    std::string raw;
};

bool operator==(const CanonicalAnswer& a, const CanonicalAnswer& b);

// Absolute tolerance for numeric answer comparison. MWP answers are exact;
// this only absorbs float printing noise.
inline constexpr double kNumericTolerance = 1e-6;
inline constexpr int kDefaultSamplesPerProblem = 10;

std::vector<ProblemRecord> load_problems(const std::filesystem::path& path,
                                         std::string_view dataset_kind);
std::vector<SolutionSample> load_solutions(const std::filesystem::path& path);

// Strips currency/percent decoration and thousands separators, parses
// integers, decimals, and simple "p/q" fractions; extracts a single A-E
// letter for multiple choice. Unparseable input falls back to kind=text.
CanonicalAnswer normalize_answer(std::string_view raw, AnswerFormat format);

bool match_answer(const CanonicalAnswer& extracted, const CanonicalAnswer& gold);

// Last parseable number / choice letter in the final line containing
// "answer" (case-insensitive), else the last in the whole text.
std::optional<std::string> extract_answer(std::string_view solution_text, AnswerFormat format);

std::vector<ErrorSample> build_error_candidates(const std::vector<SolutionSample>& samples,
                                                const std::vector<ProblemRecord>& problems);

struct CheckerFailure {
    std::string sample_id;
    std::string message;
};

struct FilterResult {
    std::vector<ErrorSample> kept;
    std::vector<ErrorSample> removed;  // format deviations, not genuine errors
    std::vector<CheckerFailure> failures;
};

// checker(sample) returns true when the solution is semantically right and
// only deviates in format. Checker exceptions are recorded and the sample is
// kept: a candidate is never dropped silently.
using SolutionChecker = std::function<bool(const ErrorSample&)>;

FilterResult apply_checker_filter(const std::vector<ErrorSample>& candidates,
                                  const SolutionChecker& checker);

// ceil(fraction * n) samples without replacement, deterministic per seed.
std::vector<ErrorSample> sample_audit(const std::vector<ErrorSample>& filtered, double fraction,
                                      std::uint64_t seed);

void write_error_samples(const std::filesystem::path& path, const std::vector<ErrorSample>& samples,
                         Verdict verdict);
std::vector<ErrorSample> read_error_samples(const std::filesystem::path& path);
void write_audit_samples(const std::filesystem::path& path, const std::vector<ErrorSample>& samples);
void write_solutions(const std::filesystem::path& path, const std::vector<SolutionSample>& samples);
void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& problems);

}  // namespace errtax::corpus
