#include <doctest.h>

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "errtax/corpus.hpp"
#include "errtax/errors.hpp"
#include "test_support.hpp"

using namespace errtax;
using corpus::AnswerFormat;
using corpus::AnswerKind;

TEST_CASE("normalize_answer strips decoration from numbers") {
    auto a = corpus::normalize_answer("$1,234.50", AnswerFormat::numeric);
    REQUIRE(a.kind == AnswerKind::number);
    CHECK(*a.numeric_value == doctest::Approx(1234.5).epsilon(1e-12));

    auto pct = corpus::normalize_answer("72%", AnswerFormat::numeric);
    REQUIRE(pct.kind == AnswerKind::number);
    CHECK(*pct.numeric_value == doctest::Approx(72.0));

    auto neg = corpus::normalize_answer("-8", AnswerFormat::numeric);
    REQUIRE(neg.kind == AnswerKind::number);
    CHECK(*neg.numeric_value == doctest::Approx(-8.0));
}

TEST_CASE("normalize_answer parses simple fractions") {
    auto a = corpus::normalize_answer("3/4", AnswerFormat::numeric);
    REQUIRE(a.kind == AnswerKind::number);
    CHECK(*a.numeric_value == doctest::Approx(0.75));

    // Division by zero is not a number.
    CHECK(corpus::normalize_answer("3/0", AnswerFormat::numeric).kind == AnswerKind::text);
}

TEST_CASE("normalize_answer extracts choice letters") {
    for (const char* raw : {"B", "(B)", "B.", "b)"}) {
        auto a = corpus::normalize_answer(raw, AnswerFormat::multiple_choice);
        REQUIRE(a.kind == AnswerKind::choice);
        CHECK(*a.choice_letter == 'B');
    }
    CHECK(corpus::normalize_answer("BB", AnswerFormat::multiple_choice).kind == AnswerKind::text);
    CHECK(corpus::normalize_answer("F", AnswerFormat::multiple_choice).kind == AnswerKind::text);
}

TEST_CASE("normalize_answer falls back to text") {
    auto a = corpus::normalize_answer("  about twelve  ", AnswerFormat::numeric);
    CHECK(a.kind == AnswerKind::text);
    CHECK(a.raw == "about twelve");
}

TEST_CASE("match_answer compares numbers within the fixed tolerance") {
    auto n = [](const char* raw) { return corpus::normalize_answer(raw, AnswerFormat::numeric); };
    CHECK(corpus::match_answer(n("18"), n("18.0")));
    CHECK(corpus::match_answer(n("0.3"), n("0.3000001")));
    CHECK_FALSE(corpus::match_answer(n("18"), n("19")));
    // Text retried under the numeric interpretation.
    auto text = corpus::normalize_answer("eighteen", AnswerFormat::numeric);
    CHECK_FALSE(corpus::match_answer(text, n("18")));
}

TEST_CASE("extract_answer prefers the announcing line") {
    auto got = corpus::extract_answer("Step 1: 3 + 4 = 7\nStep 2: 7 * 2 = 14\nAnswer: 14",
                                      AnswerFormat::numeric);
    REQUIRE(got);
    CHECK(*got == "14");

    // The last number on the answer line wins.
    got = corpus::extract_answer("The answer is 3 * 6 = 18 dollars.", AnswerFormat::numeric);
    REQUIRE(got);
    CHECK(*got == "18");

    // An unsimplified final step yields its last operand.
    got = corpus::extract_answer("Answer: 3 * 6", AnswerFormat::numeric);
    REQUIRE(got);
    CHECK(*got == "6");
}

TEST_CASE("extract_answer falls back to the last number anywhere") {
    auto got = corpus::extract_answer("We compute 5 + 2 = 7.\nSo that is the result.",
                                      AnswerFormat::numeric);
    REQUIRE(got);
    CHECK(*got == "7");
    CHECK_FALSE(corpus::extract_answer("no digits here", AnswerFormat::numeric));
}

TEST_CASE("extract_answer finds choice letters") {
    auto got = corpus::extract_answer("Comparing the options, I pick it.\nAnswer: (C)",
                                      AnswerFormat::multiple_choice);
    REQUIRE(got);
    CHECK(*got == "C");
}

TEST_CASE("load_problems reads the fixture corpus") {
    auto problems = corpus::load_problems(testsup::fixture_path("problems.jsonl"), "gsm8k");
    REQUIRE(problems.size() == 50);
    CHECK(problems.front().id == "p001");
    CHECK(problems.front().dataset == "fixture-mwp");
    CHECK(problems.front().answer_format == AnswerFormat::numeric);
    CHECK_FALSE(problems.front().question.empty());
    CHECK_FALSE(problems.front().gold_answer.empty());
}

TEST_CASE("load_problems rejects duplicates and missing fields") {
    testsup::TempDir tmp("corpus");
    auto dup = tmp / "dup.jsonl";
    testsup::write_file(dup,
                        R"({"id":"p1","question":"q","gold_answer":"1"})" "\n"
                        R"({"id":"p1","question":"q2","gold_answer":"2"})" "\n");
    CHECK_THROWS_AS(corpus::load_problems(dup, "gsm8k"), DuplicateIdError);

    auto missing = tmp / "missing.jsonl";
    testsup::write_file(missing, R"({"id":"p1","question":"q"})" "\n");
    CHECK_THROWS_AS(corpus::load_problems(missing, "gsm8k"), ParseError);

    auto malformed = tmp / "malformed.jsonl";
    testsup::write_file(malformed, "{not json\n");
    CHECK_THROWS_AS(corpus::load_problems(malformed, "gsm8k"), ParseError);
}

TEST_CASE("load_solutions reads the fixture samples") {
    auto solutions = corpus::load_solutions(testsup::fixture_path("solutions.jsonl"));
    REQUIRE(solutions.size() == 440);
    CHECK(solutions.front().problem_id == "p001");
    CHECK_FALSE(solutions.front().model_id.empty());
}

TEST_CASE("build_error_candidates keeps mismatches in a stable order") {
    std::vector<corpus::ProblemRecord> problems(2);
    problems[0].id = "p1";
    problems[0].question = "What is 3 + 4?";
    problems[0].gold_answer = "7";
    problems[1].id = "p2";
    problems[1].question = "What is 2 * 5?";
    problems[1].gold_answer = "10";
    problems[1].dataset = "toy";

    auto sample = [](const char* pid, const char* model, int idx, const char* text) {
        corpus::SolutionSample s;
        s.problem_id = pid;
        s.model_id = model;
        s.sample_index = idx;
        s.text = text;
        return s;
    };
    std::vector<corpus::SolutionSample> samples = {
        sample("p2", "m1", 0, "Answer: 11"),          // wrong
        sample("p1", "m1", 0, "Answer: 7"),           // correct, excluded
        sample("p1", "m2", 1, "Answer: 8"),           // wrong
        sample("p1", "m2", 0, "no digits at all"),    // unextractable counts as wrong
    };

    auto candidates = corpus::build_error_candidates(samples, problems);
    REQUIRE(candidates.size() == 3);
    CHECK(candidates[0].id == "p1#m2#0");
    CHECK(candidates[1].id == "p1#m2#1");
    CHECK(candidates[2].id == "p2#m1#0");
    CHECK(candidates[2].source_model == "m1");
    CHECK(candidates[2].source_dataset == "toy");
    CHECK(candidates[2].question == "What is 2 * 5?");

    corpus::SolutionSample orphan = sample("p9", "m1", 0, "Answer: 1");
    CHECK_THROWS_AS(corpus::build_error_candidates({orphan}, problems), Error);
}

TEST_CASE("apply_checker_filter splits kept from removed and records failures") {
    std::vector<corpus::ErrorSample> candidates(3);
    candidates[0].id = "a";
    candidates[1].id = "b";
    candidates[2].id = "c";

    auto result = corpus::apply_checker_filter(candidates, [](const corpus::ErrorSample& s) {
        if (s.id == "b") return true;                        // format deviation
        if (s.id == "c") throw std::runtime_error("boom");   // checker failure
        return false;                                        // genuine error
    });

    REQUIRE(result.kept.size() == 2);
    CHECK(result.kept[0].id == "a");
    CHECK(result.kept[1].id == "c");  // never dropped silently
    REQUIRE(result.removed.size() == 1);
    CHECK(result.removed[0].id == "b");
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].sample_id == "c");
    CHECK(result.failures[0].message == "boom");
}

TEST_CASE("sample_audit draws ceil(fraction * n) distinct samples deterministically") {
    std::vector<corpus::ErrorSample> filtered(10);
    for (int i = 0; i < 10; ++i) filtered[static_cast<std::size_t>(i)].id = "s" + std::to_string(i);

    auto audit = corpus::sample_audit(filtered, 0.25, 99);
    REQUIRE(audit.size() == 3);  // ceil(2.5)

    std::set<std::string> ids;
    for (const auto& s : audit) ids.insert(s.id);
    CHECK(ids.size() == audit.size());

    auto again = corpus::sample_audit(filtered, 0.25, 99);
    for (std::size_t i = 0; i < audit.size(); ++i) CHECK(audit[i].id == again[i].id);

    CHECK(corpus::sample_audit(filtered, 0.0, 1).empty());
    CHECK(corpus::sample_audit(filtered, 1.0, 1).size() == 10);
    CHECK_THROWS_AS(corpus::sample_audit(filtered, 1.5, 1), Error);
}

TEST_CASE("error samples round-trip through jsonl") {
    testsup::TempDir tmp("roundtrip");
    std::vector<corpus::ErrorSample> samples(2);
    samples[0] = {"p1#m1#0", "q one", "7", "Answer: 8", "m1", "toy"};
    samples[1] = {"p2#m1#3", "q \"two\"", "10", "line1\nline2", "m1", "toy"};

    auto path = tmp / "errors.jsonl";
    corpus::write_error_samples(path, samples, corpus::Verdict::wrong_answer);
    auto back = corpus::read_error_samples(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].id == samples[i].id);
        CHECK(back[i].question == samples[i].question);
        CHECK(back[i].gold_answer == samples[i].gold_answer);
        CHECK(back[i].solution == samples[i].solution);
        CHECK(back[i].source_model == samples[i].source_model);
        CHECK(back[i].source_dataset == samples[i].source_dataset);
    }
}
