#include "errtax/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>

#include "errtax/errors.hpp"
#include "errtax/jsonl.hpp"

namespace errtax::analysis {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Matches "<integer>. <text>", returning the number, or 0 when no match.
int numbered_point(const std::string& line, std::string* text) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size()) return 0;
    if (line[i] != '.' || !std::isspace(static_cast<unsigned char>(line[i + 1]))) return 0;
    if (text) *text = trim(line.substr(i + 2));
    return std::stoi(line.substr(0, i));
}

int word_count(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    int n = 0;
    while (in >> word) ++n;
    return n;
}

}  // namespace

bool operator==(const ErrorAnalysis& a, const ErrorAnalysis& b) {
    return a.sample_id == b.sample_id && a.detailed_explanation == b.detailed_explanation &&
           a.abstract_reasons == b.abstract_reasons && a.is_right_verdict == b.is_right_verdict;
}

ErrorAnalysis parse_analysis(const std::string& raw, const std::string& sample_id) {
    if (trim(raw).empty()) throw ParseError("empty analyzer output for sample " + sample_id);

    std::vector<std::string> lines = split_lines(raw);

    // The abstract reasons are the trailing numbered block: scan for the last
    // line numbered "1." whose following nonempty lines are all numbered.
    std::size_t list_start = lines.size();
    for (std::size_t i = lines.size(); i-- > 0;) {
        std::string text;
        if (numbered_point(trim(lines[i]), &text) != 1) continue;
        bool all_numbered = true;
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            std::string t = trim(lines[j]);
            if (t.empty()) continue;
            if (numbered_point(t, nullptr) == 0) {
                all_numbered = false;
                break;
            }
        }
        if (all_numbered) {
            list_start = i;
            break;
        }
    }

    ErrorAnalysis out;
    out.sample_id = sample_id;

    if (list_start < lines.size()) {
        for (std::size_t j = list_start; j < lines.size(); ++j) {
            std::string t = trim(lines[j]);
            if (t.empty()) continue;
            std::string reason;
            numbered_point(t, &reason);
            if (reason.empty()) continue;
            out.abstract_reasons.push_back(reason);
            if (word_count(reason) > kSoftMaxReasonWords) {
                out.warnings.push_back("reason exceeds " + std::to_string(kSoftMaxReasonWords) +
                                       " words: \"" + reason + "\"");
            }
        }
        std::string explanation;
        for (std::size_t j = 0; j < list_start; ++j) {
            if (!explanation.empty()) explanation += "\n";
            explanation += lines[j];
        }
        out.detailed_explanation = trim(explanation);
        out.is_right_verdict = false;
        if (static_cast<int>(out.abstract_reasons.size()) > kSoftMaxReasons) {
            out.warnings.push_back("more than " + std::to_string(kSoftMaxReasons) +
                                   " abstract reasons (" +
                                   std::to_string(out.abstract_reasons.size()) + ")");
        }
        return out;
    }

    if (raw.find(kRightMarker) != std::string::npos) {
        out.is_right_verdict = true;
        // The marker line is the verdict, not part of the explanation.
        std::string explanation;
        for (const auto& line : lines) {
            if (trim(line) == kRightMarker) continue;
            if (!explanation.empty()) explanation += "\n";
            explanation += line;
        }
        out.detailed_explanation = trim(explanation);
        return out;
    }
    throw ParseError("analyzer output for sample " + sample_id +
                     " has neither a numbered reason list nor the rightness marker");
}

std::string render_analysis(const ErrorAnalysis& analysis) {
    if (analysis.is_right_verdict) {
        return analysis.detailed_explanation.empty()
                   ? std::string(kRightMarker)
                   : analysis.detailed_explanation + "\n" + kRightMarker;
    }
    std::ostringstream os;
    if (!analysis.detailed_explanation.empty()) os << analysis.detailed_explanation << "\n";
    for (std::size_t i = 0; i < analysis.abstract_reasons.size(); ++i) {
        os << (i + 1) << ". " << analysis.abstract_reasons[i];
        if (i + 1 < analysis.abstract_reasons.size()) os << "\n";
    }
    return os.str();
}

ErrorAnalysis analyze_error(const corpus::ErrorSample& sample, clients::CompletionClient& client,
                            const prompts::PromptTemplate& tmpl,
                            const clients::CompletionParams& params) {
    std::string prompt = tmpl.fill({{"question", sample.question},
                                    {"response", sample.solution},
                                    {"answer", sample.gold_answer}});
    std::string raw = client.complete(prompt, params);
    return parse_analysis(raw, sample.id);
}

AnalysisBatch analyze_all(const std::vector<corpus::ErrorSample>& samples,
                          clients::CompletionClient& client, const prompts::PromptTemplate& tmpl,
                          const clients::CompletionParams& params) {
    AnalysisBatch batch;
    for (const auto& sample : samples) {
        std::string prompt = tmpl.fill({{"question", sample.question},
                                        {"response", sample.solution},
                                        {"answer", sample.gold_answer}});
        std::string raw = client.complete(prompt, params);
        try {
            batch.analyses.push_back(parse_analysis(raw, sample.id));
        } catch (const ParseError& e) {
            batch.failures.push_back({sample.id, raw, e.what()});
        }
    }
    return batch;
}

CheckerVerdict check_solution_validity(const corpus::ErrorSample& sample,
                                       clients::CompletionClient& client,
                                       const prompts::PromptTemplate& tmpl,
                                       const clients::CompletionParams& params) {
    std::string prompt = tmpl.fill({{"question", sample.question},
                                    {"gold_answer", sample.gold_answer},
                                    {"solution", sample.solution}});
    std::string raw = client.complete(prompt, params);

    CheckerVerdict verdict;
    bool found = false;
    for (const auto& line : split_lines(raw)) {
        std::string t = trim(line);
        if (t.rfind("VERDICT:", 0) == 0) {
            std::string value = trim(t.substr(8));
            if (value == "RIGHT") {
                verdict.judgement = Judgement::right;
                found = true;
            } else if (value == "WRONG") {
                verdict.judgement = Judgement::wrong;
                found = true;
            }
        } else if (t.rfind("RATIONALE:", 0) == 0) {
            verdict.rationale = trim(t.substr(10));
        }
    }
    if (!found) {
        throw ParseError("checker output for sample " + sample.id +
                         " has no VERDICT line: " + raw);
    }
    return verdict;
}

corpus::SolutionChecker make_checker(clients::CompletionClient& client,
                                     const prompts::PromptTemplate& tmpl,
                                     const clients::CompletionParams& params) {
    return [&client, &tmpl, params](const corpus::ErrorSample& sample) {
        return check_solution_validity(sample, client, tmpl, params).judgement == Judgement::right;
    };
}

std::string to_string(StaticCode code) {
    switch (code) {
        case StaticCode::CA: return "CA";
        case StaticCode::CO: return "CO";
        case StaticCode::UC: return "UC";
        case StaticCode::CV: return "CV";
        case StaticCode::HA: return "HA";
        case StaticCode::OP: return "OP";
        case StaticCode::FC: return "FC";
        case StaticCode::MS: return "MS";
        case StaticCode::CS: return "CS";
    }
    return "CA";
}

StaticCode static_code_from_string(const std::string& s) {
    static const std::map<std::string, StaticCode> codes = {
        {"CA", StaticCode::CA}, {"CO", StaticCode::CO}, {"UC", StaticCode::UC},
        {"CV", StaticCode::CV}, {"HA", StaticCode::HA}, {"OP", StaticCode::OP},
        {"FC", StaticCode::FC}, {"MS", StaticCode::MS}, {"CS", StaticCode::CS},
    };
    auto it = codes.find(s);
    if (it == codes.end()) throw ParseError("unknown static error code \"" + s + "\"");
    return it->second;
}

StaticErrorType parse_static_classification(const std::string& raw) {
    // The last "(XX)" with a known code wins, so echoed type definitions in
    // front of the real classification line do not confuse the parse.
    std::optional<StaticCode> code;
    for (std::size_t i = 0; i + 3 < raw.size(); ++i) {
        if (raw[i] != '(' || raw[i + 3] != ')') continue;
        std::string candidate = raw.substr(i + 1, 2);
        try {
            code = static_code_from_string(candidate);
        } catch (const ParseError&) {
        }
    }
    if (!code) throw ParseError("no static error code found in: " + raw);
    return StaticErrorType{*code};
}

StaticErrorType classify_static(const corpus::ErrorSample& sample,
                                clients::CompletionClient& client,
                                const prompts::PromptTemplate& tmpl,
                                const clients::CompletionParams& params) {
    std::string prompt =
        tmpl.fill({{"question", sample.question}, {"solution", sample.solution}});
    return parse_static_classification(client.complete(prompt, params));
}

void write_analyses(const std::filesystem::path& path, const AnalysisBatch& batch) {
    jsonl::Writer writer(path);
    for (const auto& a : batch.analyses) {
        writer.write(nlohmann::json{{"sample_id", a.sample_id},
                                    {"detailed_explanation", a.detailed_explanation},
                                    {"abstract_reasons", a.abstract_reasons},
                                    {"is_right_verdict", a.is_right_verdict},
                                    {"warnings", a.warnings}});
    }
    for (const auto& f : batch.failures) {
        writer.write(nlohmann::json{{"sample_id", f.sample_id},
                                    {"parse_failure", true},
                                    {"raw", f.raw},
                                    {"message", f.message}});
    }
}

AnalysisBatch read_analyses(const std::filesystem::path& path) {
    AnalysisBatch batch;
    jsonl::for_each_record(path, [&](const nlohmann::json& j, std::size_t line) {
        if (j.value("parse_failure", false)) {
            ParseFailure f;
            f.sample_id = j.value("sample_id", "");
            f.raw = j.value("raw", "");
            f.message = j.value("message", "");
            batch.failures.push_back(std::move(f));
            return;
        }
        ErrorAnalysis a;
        if (!j.contains("sample_id") || !j["sample_id"].is_string()) {
            throw ParseError("analysis record missing sample_id in " + path.string(), line);
        }
        a.sample_id = j["sample_id"].get<std::string>();
        a.detailed_explanation = j.value("detailed_explanation", "");
        if (j.contains("abstract_reasons")) {
            a.abstract_reasons = j["abstract_reasons"].get<std::vector<std::string>>();
        }
        a.is_right_verdict = j.value("is_right_verdict", false);
        if (j.contains("warnings")) {
            a.warnings = j["warnings"].get<std::vector<std::string>>();
        }
        batch.analyses.push_back(std::move(a));
    });
    return batch;
}

}  // namespace errtax::analysis
