#pragma once

// Prompt templates stored as plain-text assets with {{placeholder}} slots.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace errtax::prompts {

class PromptTemplate {
public:
    explicit PromptTemplate(std::string text);

    static PromptTemplate load(const std::filesystem::path& path);

    // Every placeholder must be supplied and every supplied key must appear
    // in the template; both mismatches are hard errors.
    std::string fill(const std::map<std::string, std::string>& values) const;

    const std::vector<std::string>& placeholders() const { return placeholders_; }
    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::vector<std::string> placeholders_;
};

// Well-known asset file names, resolved against a prompt directory.
inline constexpr std::string_view kErrorAnalyzerAsset = "error_analyzer.txt";
inline constexpr std::string_view kStaticClassifierAsset = "static_classifier.txt";
inline constexpr std::string_view kCheckerAsset = "checker.txt";
inline constexpr std::string_view kKnowledgePointsAsset = "knowledge_points.txt";
inline constexpr std::string_view kClusterLabelAsset = "cluster_label.txt";

// Pinned chain-of-thought instruction shared by solution generation and the
// error-aware prompt builder.
inline constexpr std::string_view kCotInstruction =
    "Let's think step by step, then state the final answer on a line beginning with \"Answer:\".";

std::string cot_prompt(std::string_view question);

std::filesystem::path default_prompt_dir();
PromptTemplate load_asset(const std::filesystem::path& prompt_dir, std::string_view asset);

}  // namespace errtax::prompts
