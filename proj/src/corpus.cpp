#include "errtax/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "errtax/errors.hpp"
#include "errtax/jsonl.hpp"
#include "errtax/rng.hpp"

namespace errtax::corpus {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Parses a decorated number: optional $ prefix, % suffix, thousands commas,
// sign, decimals, and simple p/q fractions.
std::optional<double> parse_number(std::string_view raw) {
    std::string s(trim(raw));
    if (s.empty()) return std::nullopt;
    if (s.front() == '$') s.erase(s.begin());
    if (!s.empty() && s.back() == '%') s.pop_back();
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        if (c == ',') continue;
        cleaned.push_back(c);
    }
    if (cleaned.empty()) return std::nullopt;

    auto slash = cleaned.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < cleaned.size()) {
        std::optional<double> num = parse_number(cleaned.substr(0, slash));
        std::optional<double> den = parse_number(cleaned.substr(slash + 1));
        if (num && den && *den != 0.0) return *num / *den;
        return std::nullopt;
    }

    const char* begin = cleaned.data();
    const char* end = begin + cleaned.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

// Accepts "B", "(B)", "B.", "b)" as the letter B. Anything longer than a
// decorated single letter is rejected.
std::optional<char> parse_choice(std::string_view raw) {
    std::string s(trim(raw));
    if (s.empty() || s.size() > 4) return std::nullopt;
    std::string letters;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            letters.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        } else if (c != '(' && c != ')' && c != '.' && c != ':') {
            return std::nullopt;
        }
    }
    if (letters.size() != 1) return std::nullopt;
    if (letters[0] < 'A' || letters[0] > 'E') return std::nullopt;
    return letters[0];
}

std::string require_string(const nlohmann::json& record, const char* key,
                           const std::filesystem::path& path, std::size_t line) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        throw ParseError("missing or non-string field \"" + std::string(key) + "\" in " +
                             path.string(),
                         line);
    }
    return it->get<std::string>();
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Last numeric token in the line. Tokens are maximal runs of number-ish
// characters; a token must parse fully (so "12.Then" still yields 12 via the
// trailing-period trim, but "v2" does not match the letter run).
std::optional<std::string> last_number_token(std::string_view line) {
    std::optional<std::string> best;
    std::size_t i = 0;
    auto is_number_char = [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ',' || c == '/' ||
               c == '$' || c == '%' || c == '-';
    };
    while (i < line.size()) {
        if (!is_number_char(line[i]) ||
            (!std::isdigit(static_cast<unsigned char>(line[i])) && line[i] != '$' &&
             line[i] != '-')) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < line.size() && is_number_char(line[j])) ++j;
        std::string token(line.substr(i, j - i));
        // Trim trailing punctuation that belongs to the sentence, not the number.
        while (!token.empty() && (token.back() == '.' || token.back() == ',')) token.pop_back();
        if (parse_number(token)) best = token;
        i = j;
    }
    return best;
}

std::optional<std::string> last_choice_token(std::string_view line) {
    std::optional<std::string> best;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        bool left_ok = (i == 0) || !std::isalnum(static_cast<unsigned char>(line[i - 1]));
        bool right_ok = (i + 1 == line.size()) || !std::isalnum(static_cast<unsigned char>(line[i + 1]));
        if (!left_ok || !right_ok) continue;
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up >= 'A' && up <= 'E') best = std::string(1, up);
    }
    return best;
}

nlohmann::json problem_to_json(const ProblemRecord& p) {
    nlohmann::json j{{"id", p.id},
                     {"dataset", p.dataset},
                     {"question", p.question},
                     {"gold_answer", p.gold_answer},
                     {"answer_format", to_string(p.answer_format)}};
    if (p.knowledge_point_route) j["knowledge_point_route"] = *p.knowledge_point_route;
    return j;
}

nlohmann::json solution_to_json(const SolutionSample& s) {
    nlohmann::json j{{"problem_id", s.problem_id},
                     {"model_id", s.model_id},
                     {"sample_index", s.sample_index},
                     {"text", s.text},
                     {"verdict", to_string(s.verdict)}};
    if (s.extracted_answer) j["extracted_answer"] = *s.extracted_answer;
    return j;
}

nlohmann::json error_sample_to_json(const ErrorSample& s) {
    return nlohmann::json{{"id", s.id},
                          {"question", s.question},
                          {"gold_answer", s.gold_answer},
                          {"solution", s.solution},
                          {"source_model", s.source_model},
                          {"source_dataset", s.source_dataset}};
}

ErrorSample error_sample_from_json(const nlohmann::json& j, const std::filesystem::path& path,
                                   std::size_t line) {
    ErrorSample s;
    s.id = require_string(j, "id", path, line);
    s.question = require_string(j, "question", path, line);
    s.gold_answer = require_string(j, "gold_answer", path, line);
    s.solution = require_string(j, "solution", path, line);
    s.source_model = require_string(j, "source_model", path, line);
    s.source_dataset = require_string(j, "source_dataset", path, line);
    return s;
}

}  // namespace

AnswerFormat answer_format_from_string(std::string_view s) {
    if (s == "numeric") return AnswerFormat::numeric;
    if (s == "multiple_choice") return AnswerFormat::multiple_choice;
    throw Error("unknown answer format \"" + std::string(s) + "\"");
}

std::string to_string(AnswerFormat f) {
    return f == AnswerFormat::numeric ? "numeric" : "multiple_choice";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::correct: return "correct";
        case Verdict::wrong_answer: return "wrong_answer";
        case Verdict::format_deviation: return "format_deviation";
        case Verdict::unchecked: return "unchecked";
    }
    return "unchecked";
}

bool operator==(const CanonicalAnswer& a, const CanonicalAnswer& b) {
    return match_answer(a, b);
}

std::vector<ProblemRecord> load_problems(const std::filesystem::path& path,
                                         std::string_view dataset_kind) {
    std::vector<ProblemRecord> problems;
    std::set<std::string> seen;
    jsonl::for_each_record(path, [&](const nlohmann::json& j, std::size_t line) {
        ProblemRecord p;
        p.id = require_string(j, "id", path, line);
        p.question = require_string(j, "question", path, line);
        p.gold_answer = require_string(j, "gold_answer", path, line);
        p.dataset = j.contains("dataset") && j["dataset"].is_string()
                        ? j["dataset"].get<std::string>()
                        : std::string(dataset_kind);
        if (j.contains("answer_format") && j["answer_format"].is_string()) {
            p.answer_format = answer_format_from_string(j["answer_format"].get<std::string>());
        } else {
            p.answer_format = dataset_kind == "multiple_choice" ? AnswerFormat::multiple_choice
                                                                : AnswerFormat::numeric;
        }
        if (j.contains("knowledge_point_route") && j["knowledge_point_route"].is_string()) {
            p.knowledge_point_route = j["knowledge_point_route"].get<std::string>();
        }
        if (!seen.insert(p.id).second) throw DuplicateIdError(p.id);
        problems.push_back(std::move(p));
    });
    return problems;
}

std::vector<SolutionSample> load_solutions(const std::filesystem::path& path) {
    std::vector<SolutionSample> samples;
    std::set<std::string> seen;
    jsonl::for_each_record(path, [&](const nlohmann::json& j, std::size_t line) {
        SolutionSample s;
        s.problem_id = require_string(j, "problem_id", path, line);
        s.model_id = require_string(j, "model_id", path, line);
        s.text = require_string(j, "text", path, line);
        auto it = j.find("sample_index");
        if (it == j.end() || !it->is_number_integer()) {
            throw ParseError("missing or non-integer field \"sample_index\" in " + path.string(),
                             line);
        }
        s.sample_index = it->get<int>();
        if (j.contains("extracted_answer") && j["extracted_answer"].is_string()) {
            s.extracted_answer = j["extracted_answer"].get<std::string>();
        }
        if (j.contains("verdict") && j["verdict"].is_string()) {
            std::string v = j["verdict"].get<std::string>();
            if (v == "correct") s.verdict = Verdict::correct;
            else if (v == "wrong_answer") s.verdict = Verdict::wrong_answer;
            else if (v == "format_deviation") s.verdict = Verdict::format_deviation;
            else s.verdict = Verdict::unchecked;
        }
        std::string key = s.problem_id + "#" + s.model_id + "#" + std::to_string(s.sample_index);
        if (!seen.insert(key).second) throw DuplicateIdError(key);
        samples.push_back(std::move(s));
    });
    return samples;
}

CanonicalAnswer normalize_answer(std::string_view raw, AnswerFormat format) {
    CanonicalAnswer out;
    out.raw = std::string(trim(raw));
    if (format == AnswerFormat::multiple_choice) {
        if (auto letter = parse_choice(out.raw)) {
            out.kind = AnswerKind::choice;
            out.choice_letter = *letter;
            return out;
        }
    }
    if (auto value = parse_number(out.raw)) {
        out.kind = AnswerKind::number;
        out.numeric_value = *value;
        return out;
    }
    if (format == AnswerFormat::numeric) {
        // A stray letter in a numeric task is still a usable choice-like token
        // only when it is unambiguous; otherwise keep the raw text.
        if (auto letter = parse_choice(out.raw)) {
            out.kind = AnswerKind::choice;
            out.choice_letter = *letter;
            return out;
        }
    }
    out.kind = AnswerKind::text;
    return out;
}

bool match_answer(const CanonicalAnswer& extracted, const CanonicalAnswer& gold) {
    if (extracted.kind == AnswerKind::number && gold.kind == AnswerKind::number) {
        return std::fabs(*extracted.numeric_value - *gold.numeric_value) <= kNumericTolerance;
    }
    if (extracted.kind == AnswerKind::choice && gold.kind == AnswerKind::choice) {
        return *extracted.choice_letter == *gold.choice_letter;
    }
    // Cross-kind: retry the text side under the other side's interpretation.
    if (extracted.kind == AnswerKind::text && gold.kind == AnswerKind::number) {
        if (auto v = parse_number(extracted.raw)) {
            return std::fabs(*v - *gold.numeric_value) <= kNumericTolerance;
        }
        return false;
    }
    if (gold.kind == AnswerKind::text && extracted.kind == AnswerKind::number) {
        if (auto v = parse_number(gold.raw)) {
            return std::fabs(*extracted.numeric_value - *v) <= kNumericTolerance;
        }
        return false;
    }
    if (extracted.kind == AnswerKind::text && gold.kind == AnswerKind::choice) {
        if (auto c = parse_choice(extracted.raw)) return *c == *gold.choice_letter;
        return false;
    }
    if (gold.kind == AnswerKind::text && extracted.kind == AnswerKind::choice) {
        if (auto c = parse_choice(gold.raw)) return *c == *extracted.choice_letter;
        return false;
    }
    if (extracted.kind == AnswerKind::text && gold.kind == AnswerKind::text) {
        return lower(trim(extracted.raw)) == lower(trim(gold.raw));
    }
    return false;
}

std::optional<std::string> extract_answer(std::string_view solution_text, AnswerFormat format) {
    auto lines = split_lines(solution_text);
    auto token_in = [&](std::string_view line) -> std::optional<std::string> {
        if (format == AnswerFormat::multiple_choice) {
            if (auto t = last_choice_token(line)) return t;
            return last_number_token(line);
        }
        return last_number_token(line);
    };

    // Prefer the last line that announces an answer.
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (lower(*it).find("answer") == std::string::npos) continue;
        if (auto t = token_in(*it)) return t;
        break;
    }
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (auto t = token_in(*it)) return t;
    }
    return std::nullopt;
}

std::vector<ErrorSample> build_error_candidates(const std::vector<SolutionSample>& samples,
                                                const std::vector<ProblemRecord>& problems) {
    std::map<std::string, const ProblemRecord*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;

    std::vector<const SolutionSample*> ordered;
    ordered.reserve(samples.size());
    for (const auto& s : samples) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SolutionSample* a, const SolutionSample* b) {
                         if (a->problem_id != b->problem_id) return a->problem_id < b->problem_id;
                         if (a->model_id != b->model_id) return a->model_id < b->model_id;
                         return a->sample_index < b->sample_index;
                     });

    std::vector<ErrorSample> candidates;
    for (const SolutionSample* s : ordered) {
        auto it = by_id.find(s->problem_id);
        if (it == by_id.end()) {
            throw Error("solution references unknown problem id \"" + s->problem_id + "\"");
        }
        const ProblemRecord& p = *it->second;
        std::optional<std::string> extracted =
            s->extracted_answer ? s->extracted_answer : extract_answer(s->text, p.answer_format);
        bool wrong = true;
        if (extracted) {
            CanonicalAnswer got = normalize_answer(*extracted, p.answer_format);
            CanonicalAnswer want = normalize_answer(p.gold_answer, p.answer_format);
            wrong = !match_answer(got, want);
        }
        if (!wrong) continue;
        ErrorSample e;
        e.id = s->problem_id + "#" + s->model_id + "#" + std::to_string(s->sample_index);
        e.question = p.question;
        e.gold_answer = p.gold_answer;
        e.solution = s->text;
        e.source_model = s->model_id;
        e.source_dataset = p.dataset;
        candidates.push_back(std::move(e));
    }
    return candidates;
}

FilterResult apply_checker_filter(const std::vector<ErrorSample>& candidates,
                                  const SolutionChecker& checker) {
    FilterResult result;
    for (const auto& sample : candidates) {
        bool semantically_right = false;
        bool checked = true;
        try {
            semantically_right = checker(sample);
        } catch (const std::exception& e) {
            result.failures.push_back({sample.id, e.what()});
            checked = false;
        }
        if (checked && semantically_right) {
            result.removed.push_back(sample);
        } else {
            result.kept.push_back(sample);
        }
    }
    return result;
}

std::vector<ErrorSample> sample_audit(const std::vector<ErrorSample>& filtered, double fraction,
                                      std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) throw Error("audit fraction must lie in [0, 1]");
    const std::size_t n = filtered.size();
    const auto want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<std::size_t> index(n);
    for (std::size_t i = 0; i < n; ++i) index[i] = i;
    auto engine = rng::make_engine(seed);
    std::vector<ErrorSample> audit;
    audit.reserve(want);
    for (std::size_t i = 0; i < want && i < n; ++i) {
        std::size_t j = i + rng::uniform_index(engine, n - i);
        std::swap(index[i], index[j]);
        audit.push_back(filtered[index[i]]);
    }
    return audit;
}

void write_error_samples(const std::filesystem::path& path, const std::vector<ErrorSample>& samples,
                         Verdict verdict) {
    jsonl::Writer writer(path);
    for (const auto& s : samples) {
        nlohmann::json j = error_sample_to_json(s);
        j["verdict"] = to_string(verdict);
        writer.write(j);
    }
}

std::vector<ErrorSample> read_error_samples(const std::filesystem::path& path) {
    std::vector<ErrorSample> samples;
    std::set<std::string> seen;
    jsonl::for_each_record(path, [&](const nlohmann::json& j, std::size_t line) {
        ErrorSample s = error_sample_from_json(j, path, line);
        if (!seen.insert(s.id).second) throw DuplicateIdError(s.id);
        samples.push_back(std::move(s));
    });
    return samples;
}

void write_audit_samples(const std::filesystem::path& path,
                         const std::vector<ErrorSample>& samples) {
    jsonl::Writer writer(path);
    for (const auto& s : samples) {
        nlohmann::json j = error_sample_to_json(s);
        j["audit"] = true;
        writer.write(j);
    }
}

void write_solutions(const std::filesystem::path& path, const std::vector<SolutionSample>& samples) {
    jsonl::Writer writer(path);
    for (const auto& s : samples) writer.write(solution_to_json(s));
}

void write_problems(const std::filesystem::path& path, const std::vector<ProblemRecord>& problems) {
    jsonl::Writer writer(path);
    for (const auto& p : problems) writer.write(problem_to_json(p));
}

}  // namespace errtax::corpus
