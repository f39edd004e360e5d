#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "errtax/errors.hpp"
#include "errtax/prompts.hpp"
#include "test_support.hpp"

using namespace errtax;

TEST_CASE("template placeholders are collected in order, once each") {
    prompts::PromptTemplate t("a {{x}} b {{y}} c {{x}}");
    REQUIRE(t.placeholders().size() == 2);
    CHECK(t.placeholders()[0] == "x");
    CHECK(t.placeholders()[1] == "y");
}

TEST_CASE("fill substitutes every slot") {
    prompts::PromptTemplate t("Q: {{q}}\nA: {{a}}\nagain {{q}}");
    CHECK(t.fill({{"q", "seven"}, {"a", "7"}}) == "Q: seven\nA: 7\nagain seven");
}

TEST_CASE("fill rejects missing and unknown keys") {
    prompts::PromptTemplate t("{{x}}");
    CHECK_THROWS_AS(t.fill({}), Error);
    CHECK_THROWS_AS(t.fill({{"x", "1"}, {"y", "2"}}), Error);
}

TEST_CASE("malformed templates are rejected at construction") {
    CHECK_THROWS_AS(prompts::PromptTemplate("{{unclosed"), Error);
    CHECK_THROWS_AS(prompts::PromptTemplate("{{}}"), Error);
}

TEST_CASE("loading a missing template file fails") {
    CHECK_THROWS_AS(prompts::PromptTemplate::load("/nonexistent/tmpl.txt"), Error);
}

TEST_CASE("bundled assets load with their expected slots") {
    auto has = [](const std::vector<std::string>& names, const char* want) {
        return std::find(names.begin(), names.end(), want) != names.end();
    };

    auto analyzer = prompts::load_asset(testsup::prompt_dir(), prompts::kErrorAnalyzerAsset);
    CHECK(has(analyzer.placeholders(), "question"));
    CHECK(has(analyzer.placeholders(), "response"));
    CHECK(has(analyzer.placeholders(), "answer"));

    auto checker = prompts::load_asset(testsup::prompt_dir(), prompts::kCheckerAsset);
    CHECK(has(checker.placeholders(), "question"));
    CHECK(has(checker.placeholders(), "gold_answer"));
    CHECK(has(checker.placeholders(), "solution"));

    auto classifier = prompts::load_asset(testsup::prompt_dir(), prompts::kStaticClassifierAsset);
    CHECK(has(classifier.placeholders(), "question"));
    CHECK(has(classifier.placeholders(), "solution"));

    auto knowledge = prompts::load_asset(testsup::prompt_dir(), prompts::kKnowledgePointsAsset);
    CHECK(has(knowledge.placeholders(), "question"));

    auto label = prompts::load_asset(testsup::prompt_dir(), prompts::kClusterLabelAsset);
    CHECK(has(label.placeholders(), "reasons"));
}

TEST_CASE("cot_prompt appends the pinned instruction") {
    std::string p = prompts::cot_prompt("What is 2 + 2?");
    CHECK(p.rfind("What is 2 + 2?\n", 0) == 0);
    CHECK(p.find(prompts::kCotInstruction) != std::string::npos);
}
