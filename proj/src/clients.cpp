#include "errtax/clients.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "errtax/errors.hpp"
#include "errtax/prompts.hpp"
#include "errtax/rng.hpp"

namespace errtax::clients {

void validate(const CompletionParams& params) {
    if (params.temperature < 0.0) throw Error("temperature must be >= 0");
    if (params.top_p <= 0.0 || params.top_p > 1.0) throw Error("top_p must lie in (0, 1]");
    if (params.max_tokens < 1) throw Error("max_tokens must be >= 1");
    if (params.model_id.empty()) throw Error("model_id must be nonempty");
}

// ============================================================================
// Mock clients
// ============================================================================

void MockCompletionClient::script(std::string prompt, std::string response) {
    responses_[std::move(prompt)] = std::move(response);
}

std::string MockCompletionClient::complete(const std::string& prompt,
                                           const CompletionParams& params) {
    validate(params);
    calls_.push_back(prompt);
    auto it = responses_.find(prompt);
    if (it == responses_.end()) return kUnknownFixture;
    return it->second;
}

EmbeddingVector mock_embed(const std::string& text, int d, std::uint64_t seed) {
    if (d < 2) throw Error("embedding dimension must be >= 2");
    auto engine = rng::make_engine(rng::fnv1a(text, rng::derive_seed(seed, 0)));
    EmbeddingVector v(static_cast<std::size_t>(d));
    for (auto& x : v) x = rng::gaussian(engine);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (auto& x : v) x /= norm;
    return v;
}

std::vector<EmbeddingVector> MockEmbeddingClient::embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.empty()) throw Error("cannot embed empty text");
        out.push_back(mock_embed(t, d_, seed_));
    }
    return out;
}

// ============================================================================
// Offline completion synthesis
// ============================================================================

namespace {

enum class PromptKind { solver, checker, analyzer, classifier, knowledge, cluster_label, unknown };

PromptKind detect_kind(const std::string& prompt) {
    auto has = [&](std::string_view marker) { return prompt.find(marker) != std::string::npos; };
    if (has("You are an expert in reviewing math problem-solving steps")) {
        return PromptKind::analyzer;
    }
    if (has("You are an expert in identifying errors in mathematical problem-solving")) {
        return PromptKind::classifier;
    }
    if (has("You are a meticulous verifier of math word problem solutions")) {
        return PromptKind::checker;
    }
    if (has("You are a mathematics curriculum expert")) return PromptKind::knowledge;
    if (has("You are organizing a taxonomy of mathematical reasoning errors")) {
        return PromptKind::cluster_label;
    }
    if (has(prompts::kCotInstruction)) return PromptKind::solver;
    return PromptKind::unknown;
}

// Section extraction for filled templates. Fields are located from the end of
// the prompt so Q:/R:/A: strings inside few-shot exemplars are skipped.
std::size_t rfind_field(const std::string& text, std::string_view field) {
    std::string needle = "\n" + std::string(field);
    std::size_t pos = text.rfind(needle);
    if (pos == std::string::npos) return std::string::npos;
    return pos + 1;
}

std::string slice(const std::string& text, std::size_t begin, std::size_t end) {
    std::string out = text.substr(begin, end - begin);
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out;
}

struct Triplet {
    std::string question;
    std::string response;
    std::string answer;
};

Triplet parse_analyzer_prompt(const std::string& prompt) {
    std::size_t analysis = rfind_field(prompt, "Analysis:");
    std::size_t a = prompt.rfind("\nA: ", analysis);
    std::size_t r = prompt.rfind("\nR: ", a);
    std::size_t q = prompt.rfind("\nQ: ", r);
    if (analysis == std::string::npos || a == std::string::npos || r == std::string::npos ||
        q == std::string::npos) {
        throw Error("analyzer prompt missing Q/R/A sections");
    }
    return {slice(prompt, q + 4, r + 1), slice(prompt, r + 4, a + 1), slice(prompt, a + 4, analysis)};
}

struct CheckerRequest {
    std::string question;
    std::string gold;
    std::string solution;
};

CheckerRequest parse_checker_prompt(const std::string& prompt) {
    std::size_t sol = rfind_field(prompt, "Solution: ");
    std::size_t gold = prompt.rfind("\nStandard answer: ", sol);
    std::size_t q = prompt.rfind("\nQ: ", gold);
    if (sol == std::string::npos || gold == std::string::npos || q == std::string::npos) {
        throw Error("checker prompt missing sections");
    }
    return {slice(prompt, q + 4, gold + 1), slice(prompt, gold + 18, sol),
            slice(prompt, sol + 10, prompt.size())};
}

std::string last_nonempty_line(const std::string& text) {
    std::size_t end = text.size();
    while (end > 0) {
        std::size_t nl = text.rfind('\n', end - 1);
        std::size_t start = (nl == std::string::npos) ? 0 : nl + 1;
        std::string line = text.substr(start, end - start);
        bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
        if (!blank) return line;
        if (start == 0) break;
        end = start - 1;
    }
    return "";
}

// Arithmetic over the tail of a solution line: evaluates the last
// number-operator-number run with * and / binding tighter than + and -, so
// an unsimplified final step such as "3 * 6" compares equal to 18.
struct Token {
    bool is_number = false;
    double value = 0.0;
    char op = 0;
};

std::vector<Token> tokenize_arithmetic(std::string_view line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
            std::size_t j = i;
            std::string digits;
            while (j < line.size() &&
                   (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.' ||
                    line[j] == ',')) {
                if (line[j] != ',') digits.push_back(line[j]);
                ++j;
            }
            while (!digits.empty() && digits.back() == '.') digits.pop_back();
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
            if (ec == std::errc() && ptr == digits.data() + digits.size()) {
                tokens.push_back({true, value, 0});
            }
            i = j;
            continue;
        }
        if (c == '+' || c == '-' || c == '*' || c == '/') {
            tokens.push_back({false, 0.0, c});
            ++i;
            continue;
        }
        if (c == '$' || c == '(' || c == ')' || c == ' ') {
            ++i;
            continue;
        }
        tokens.push_back({false, 0.0, '#'});  // opaque word; breaks expression runs
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               !std::isdigit(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
    }
    return tokens;
}

std::optional<double> evaluate_run(const std::vector<Token>& tokens, std::size_t begin,
                                   std::size_t end) {
    // Two-pass precedence evaluation over tokens[begin..end] inclusive.
    std::vector<double> values;
    std::vector<char> ops;
    values.push_back(tokens[begin].value);
    for (std::size_t i = begin + 1; i + 1 <= end; i += 2) {
        char op = tokens[i].op;
        double rhs = tokens[i + 1].value;
        if (op == '*' || op == '/') {
            double lhs = values.back();
            if (op == '/' && rhs == 0.0) return std::nullopt;
            values.back() = (op == '*') ? lhs * rhs : lhs / rhs;
        } else {
            ops.push_back(op);
            values.push_back(rhs);
        }
    }
    double result = values[0];
    for (std::size_t i = 0; i < ops.size(); ++i) {
        result = (ops[i] == '+') ? result + values[i + 1] : result - values[i + 1];
    }
    return result;
}

// Value asserted by the final step of a solution: what follows the last '='
// when present, else the last arithmetic expression or number on the line.
std::optional<double> final_step_value(const std::string& solution) {
    std::string line = last_nonempty_line(solution);
    if (line.empty()) return std::nullopt;
    std::size_t eq = line.rfind('=');
    std::string_view tail = line;
    if (eq != std::string::npos) tail = std::string_view(line).substr(eq + 1);

    auto tokens = tokenize_arithmetic(tail);
    // Last maximal run of the form: number (op number)*
    std::optional<double> best;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!tokens[i].is_number) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 2 < tokens.size() && !tokens[end + 1].is_number &&
               tokens[end + 1].op != '#' && tokens[end + 2].is_number) {
            end += 2;
        }
        best = evaluate_run(tokens, i, end);
        i = end + 1;
    }
    if (best) return best;
    if (eq != std::string::npos) {
        // Nothing after '='; fall back to the full line.
        auto all = tokenize_arithmetic(line);
        for (auto it = all.rbegin(); it != all.rend(); ++it) {
            if (it->is_number) return it->value;
        }
    }
    return std::nullopt;
}

std::optional<char> final_step_letter(const std::string& solution) {
    std::string line = last_nonempty_line(solution);
    std::optional<char> best;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        bool left_ok = (i == 0) || !std::isalnum(static_cast<unsigned char>(line[i - 1]));
        bool right_ok =
            (i + 1 == line.size()) || !std::isalnum(static_cast<unsigned char>(line[i + 1]));
        if (!left_ok || !right_ok) continue;
        char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (up >= 'A' && up <= 'E') best = up;
    }
    return best;
}

// Shared rule the offline checker and analyzer use to decide whether a
// solution's final step matches the gold answer.
bool final_step_matches(const std::string& solution, const std::string& gold,
                        std::string* detail = nullptr) {
    corpus::CanonicalAnswer want = corpus::normalize_answer(gold, corpus::AnswerFormat::numeric);
    if (want.kind == corpus::AnswerKind::choice) {
        auto got = final_step_letter(solution);
        if (detail) {
            *detail = got ? std::string("final choice ") + *got : std::string("no final choice");
        }
        return got && *got == *want.choice_letter;
    }
    if (want.kind == corpus::AnswerKind::number) {
        auto got = final_step_value(solution);
        if (detail) {
            std::ostringstream os;
            if (got) {
                os << "final step evaluates to " << *got;
            } else {
                os << "no final value found";
            }
            *detail = os.str();
        }
        return got && std::fabs(*got - *want.numeric_value) <= corpus::kNumericTolerance;
    }
    std::string line = last_nonempty_line(solution);
    if (detail) *detail = "text comparison of the final line";
    return line.find(gold) != std::string::npos;
}

const std::vector<std::string>& reason_pool() {
    static const std::vector<std::string> pool = {
        "Misunderstanding of problem requirements.",
        "Misinterpretation of given quantities.",
        "Incorrect arithmetic during an intermediate calculation.",
        "Wrong operator chosen for the stated relationship.",
        "Unit conversion applied incorrectly.",
        "Failure to use all given conditions.",
        "Incorrect equation setup from the problem statement.",
        "Confusion between rates and totals.",
        "Dropped constraint while solving the equation.",
        "Rounding applied too early in the computation.",
        "Misreading of units.",
        "Incorrect fraction simplification.",
        "Sign error during algebraic manipulation.",
        "Double counting of the same quantity.",
        "Off-by-one error in counting.",
        "Formula applied outside its valid conditions.",
        "Lack of verification for the final answer.",
        "Invented value not present in the problem.",
        "Percentage applied to the wrong base.",
        "Premature termination before answering the asked question.",
    };
    return pool;
}

std::vector<double> question_numbers(const std::string& question) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < question.size() && out.size() < 6) {
        if (!std::isdigit(static_cast<unsigned char>(question[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        std::string digits;
        while (j < question.size() &&
               (std::isdigit(static_cast<unsigned char>(question[j])) || question[j] == '.')) {
            digits.push_back(question[j]);
            ++j;
        }
        while (!digits.empty() && digits.back() == '.') digits.pop_back();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec == std::errc() && ptr == digits.data() + digits.size()) out.push_back(value);
        i = j;
    }
    return out;
}

std::string format_number(double v) {
    if (std::fabs(v - std::round(v)) < 1e-9 && std::fabs(v) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(std::llround(v));
        return os.str();
    }
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string synthesize_solution(const std::string& question, std::mt19937_64& engine) {
    std::vector<double> nums = question_numbers(question);
    if (nums.size() < 2) nums = {7.0, 6.0};
    double a = nums[rng::uniform_index(engine, nums.size())];
    double b = nums[rng::uniform_index(engine, nums.size())];
    int op = static_cast<int>(rng::uniform_index(engine, 4));
    double value = 0.0;
    char symbol = '+';
    switch (op) {
        case 0: value = a + b; symbol = '+'; break;
        case 1: value = a - b; symbol = '-'; break;
        case 2: value = a * b; symbol = '*'; break;
        default:
            if (b == 0.0) b = 1.0;
            value = a / b;
            symbol = '/';
            break;
    }
    std::ostringstream os;
    os << "Step 1: Identify the relevant quantities " << format_number(a) << " and "
       << format_number(b) << " from the problem.\n";
    os << "Step 2: Combine them as " << format_number(a) << " " << symbol << " "
       << format_number(b) << " = " << format_number(value) << ".\n";
    if (rng::uniform_index(engine, 8) == 0) {
        // Occasional format deviation: leave the final step unsimplified.
        os << "Answer: " << format_number(a) << " " << symbol << " " << format_number(b);
    } else {
        os << "Answer: " << format_number(value);
    }
    return os.str();
}

std::string synthesize_analysis(const Triplet& t, std::uint64_t seed) {
    std::string detail;
    if (final_step_matches(t.response, t.answer, &detail)) return "Solution is right.";
    auto engine =
        rng::make_engine(rng::derive_seed(seed, rng::fnv1a(t.question + "\u0001" + t.response)));
    const auto& pool = reason_pool();
    std::size_t m = 1 + rng::uniform_index(engine, 3);
    std::vector<std::size_t> index(pool.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + rng::uniform_index(engine, index.size() - i);
        std::swap(index[i], index[j]);
    }
    std::ostringstream os;
    os << "The solution does not reach the correct answer " << t.answer << "; " << detail
       << ".\n";
    for (std::size_t i = 0; i < m; ++i) {
        os << (i + 1) << ". " << pool[index[i]];
        if (i + 1 < m) os << "\n";
    }
    return os.str();
}

std::string synthesize_classification(const std::string& prompt, std::uint64_t seed) {
    static const std::vector<std::string> names = {
        "Calculation Errors (CA)",    "Counting Errors (CO)",   "Unit Conversion Errors (UC)",
        "Context Value Errors (CV)",  "Hallucinations (HA)",    "Operator Errors (OP)",
        "Formula Confusion Errors (FC)", "Missing Steps (MS)",  "Contradictory Steps (CS)",
    };
    std::size_t q = rfind_field(prompt, "Q: ");
    std::string key = (q == std::string::npos) ? prompt : prompt.substr(q);
    auto engine = rng::make_engine(rng::derive_seed(seed, rng::fnv1a(key)));
    return names[rng::uniform_index(engine, names.size())] + ".";
}

std::string synthesize_knowledge(const std::string& prompt) {
    std::size_t q = rfind_field(prompt, "Question: ");
    std::size_t end = rfind_field(prompt, "Knowledge points:");
    if (q == std::string::npos || end == std::string::npos) {
        throw Error("knowledge prompt missing sections");
    }
    std::string question = slice(prompt, q + 10, end);
    // Two salient words stand in for concept names: the longest alphabetic
    // tokens, in order of first appearance.
    std::vector<std::string> words;
    std::string current;
    for (char c : question + " ") {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            if (std::find(words.begin(), words.end(), current) == words.end()) {
                words.push_back(current);
            }
            current.clear();
        }
    }
    std::vector<std::string> ranked = words;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    std::ostringstream os;
    os << "Arithmetic > " << (ranked.empty() ? std::string("numbers") : ranked[0]);
    if (ranked.size() > 1) os << "\nProblem solving > " << ranked[1];
    return os.str();
}

std::string synthesize_cluster_label(const std::string& prompt) {
    std::size_t begin = prompt.find("Error reasons:\n");
    std::size_t end = rfind_field(prompt, "Category name:");
    if (begin == std::string::npos || end == std::string::npos) {
        throw Error("cluster label prompt missing sections");
    }
    begin += std::string("Error reasons:\n").size();
    std::map<std::string, int> counts;
    std::istringstream in(prompt.substr(begin, end - begin));
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("- ", 0) == 0) line = line.substr(2);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (!line.empty()) counts[line] += 1;
    }
    std::string best;
    int best_count = 0;
    for (const auto& [text, count] : counts) {
        if (count > best_count) {
            best = text;
            best_count = count;
        }
    }
    if (best.empty()) return "Unlabeled error group";
    while (!best.empty() && (best.back() == '.' || best.back() == ' ')) best.pop_back();
    // Cap at 12 words.
    std::istringstream ws(best);
    std::string word, out;
    int n = 0;
    while (ws >> word && n < 12) {
        if (n > 0) out += " ";
        out += word;
        ++n;
    }
    return out;
}

std::string strip_cot_wrapping(const std::string& prompt) {
    std::string q = prompt;
    std::string instr = "\n" + std::string(prompts::kCotInstruction);
    std::size_t at = q.rfind(instr);
    if (at != std::string::npos) q = q.substr(0, at);
    // Error-aware prompts prepend a summary block ending in a blank line.
    std::size_t blank = q.rfind("\n\n");
    if (blank != std::string::npos && q.rfind("Common errors on related problems", 0) == 0) {
        q = q.substr(blank + 2);
    }
    return q;
}

}  // namespace

std::string OfflineCompletionClient::complete(const std::string& prompt,
                                              const CompletionParams& params) {
    validate(params);
    PromptKind kind = detect_kind(prompt);
    std::uint64_t prompt_hash = rng::fnv1a(prompt);
    int repeat = repeat_counts_[prompt_hash]++;

    switch (kind) {
        case PromptKind::solver: {
            std::string question = strip_cot_wrapping(prompt);
            auto engine = rng::make_engine(rng::derive_seed(
                seed_, rng::fnv1a(question) ^ static_cast<std::uint64_t>(repeat)));
            return synthesize_solution(question, engine);
        }
        case PromptKind::checker: {
            CheckerRequest req = parse_checker_prompt(prompt);
            std::string detail;
            bool right = final_step_matches(req.solution, req.gold, &detail);
            std::ostringstream os;
            os << "VERDICT: " << (right ? "RIGHT" : "WRONG") << "\n"
               << "RATIONALE: " << detail << "; standard answer is " << req.gold << ".";
            return os.str();
        }
        case PromptKind::analyzer:
            return synthesize_analysis(parse_analyzer_prompt(prompt), seed_);
        case PromptKind::classifier:
            return synthesize_classification(prompt, seed_);
        case PromptKind::knowledge:
            return synthesize_knowledge(prompt);
        case PromptKind::cluster_label:
            return synthesize_cluster_label(prompt);
        case PromptKind::unknown:
            break;
    }
    return kUnknownFixture;
}

// ============================================================================
// Solution generation
// ============================================================================

GenerationResult generate_solutions(const corpus::ProblemRecord& problem,
                                    const std::string& model_id, int n, CompletionClient& client,
                                    const CompletionParams& base_params) {
    if (n < 1) throw Error("sample count must be >= 1");
    CompletionParams params = base_params;
    params.model_id = model_id;
    validate(params);

    GenerationResult result;
    const std::string prompt = prompts::cot_prompt(problem.question);
    corpus::CanonicalAnswer want = corpus::normalize_answer(problem.gold_answer, problem.answer_format);
    for (int i = 0; i < n; ++i) {
        std::string text;
        try {
            text = client.complete(prompt, params);
        } catch (const std::exception& e) {
            result.failures.push_back({i, e.what()});
            continue;
        }
        corpus::SolutionSample sample;
        sample.problem_id = problem.id;
        sample.model_id = model_id;
        sample.sample_index = i;
        sample.text = text;
        sample.extracted_answer = corpus::extract_answer(text, problem.answer_format);
        if (sample.extracted_answer) {
            corpus::CanonicalAnswer got =
                corpus::normalize_answer(*sample.extracted_answer, problem.answer_format);
            sample.verdict = corpus::match_answer(got, want) ? corpus::Verdict::correct
                                                             : corpus::Verdict::wrong_answer;
        } else {
            sample.verdict = corpus::Verdict::wrong_answer;
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

}  // namespace errtax::clients
