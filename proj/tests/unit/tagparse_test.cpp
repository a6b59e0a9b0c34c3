// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rewards.hpp"
#include "tagparse.hpp"

using namespace vaur;
using namespace vaur::tags;

namespace {

const auto kQA = TaskKind::MultiChoiceQA;
const auto kTAG = TaskKind::TemporalGrounding;
const auto kCLS = TaskKind::Classification;
const auto kReason = TaskKind::Reasoning;

std::vector<Violation> only(ViolationCode code, Tag tag) { return {{code, tag}}; }

}  // namespace

TEST_CASE("canonical QA response") {
  const auto r = parse_response("<think>the man falls</think><answer>B</answer>", kQA);
  REQUIRE(r.response);
  CHECK(r.verdict.valid);
  CHECK(r.verdict.violations.empty());
  CHECK(r.response->answer == "B");
  CHECK(r.response->think == std::optional<std::string>("the man falls"));
  CHECK_FALSE(r.response->glue);
}

TEST_CASE("grounding without glue") {
  const auto r = parse_response("<answer>B</answer>", kTAG, {.require_think = false});
  CHECK_FALSE(r.verdict.valid);
  CHECK(r.verdict.violations == only(ViolationCode::MissingTag, Tag::Glue));
  REQUIRE(r.response);
  CHECK(r.response->answer == "B");

  // With the default think requirement the missing think is reported too.
  const auto strict = parse_response("<answer>B</answer>", kTAG);
  CHECK(strict.verdict.has(ViolationCode::MissingTag, Tag::Glue));
  CHECK(strict.verdict.has(ViolationCode::MissingTag, Tag::Think));
}

TEST_CASE("grounding response with glue") {
  const auto r = parse_response("<think>x</think><glue>3.0, 9.5</glue><answer>anomaly</answer>", kTAG);
  CHECK(r.verdict.valid);
  REQUIRE(r.response);
  REQUIRE(r.response->glue);
  CHECK(r.response->glue->start == 3.0);
  CHECK(r.response->glue->end == 9.5);
}

TEST_CASE("glue may sit anywhere relative to think and answer") {
  for (const char* raw : {"<glue>1, 2</glue><think>x</think><answer>a</answer>",
                          "<think>x</think><answer>a</answer><glue>1, 2</glue>",
                          "<think>x</think><glue>1 2</glue><answer>a</answer>"}) {
    CAPTURE(raw);
    CHECK(parse_response(raw, kTAG).verdict.valid);
  }
}

TEST_CASE("violation codes") {
  SUBCASE("duplicate answer") {
    const auto r = parse_response("<think>x</think><answer>A</answer><answer>B</answer>", kQA);
    CHECK(r.verdict.violations == only(ViolationCode::DuplicateTag, Tag::Answer));
    CHECK_FALSE(r.response);
  }
  SUBCASE("unclosed answer") {
    const auto r = parse_response("<think>x</think><answer>A", kQA);
    CHECK(r.verdict.violations == only(ViolationCode::MissingTag, Tag::Answer));
  }
  SUBCASE("close before open") {
    const auto r = parse_response("<think>x</think></answer>A<answer>", kQA);
    CHECK(r.verdict.violations == only(ViolationCode::TagOrder, Tag::Answer));
  }
  SUBCASE("answer before think") {
    const auto r = parse_response("<answer>A</answer><think>x</think>", kQA);
    CHECK(r.verdict.violations == only(ViolationCode::TagOrder, Tag::Think));
    REQUIRE(r.response);
    CHECK(r.response->answer == "A");
  }
  SUBCASE("think nested in answer") {
    const auto r = parse_response("<answer>A<think>x</think></answer>", kQA);
    CHECK(r.verdict.violations == only(ViolationCode::NestedTag, Tag::Think));
  }
  SUBCASE("glue nested in think for grounding") {
    const auto r = parse_response("<think>x<glue>1, 2</glue></think><answer>a</answer>", kTAG);
    CHECK(r.verdict.violations == only(ViolationCode::NestedTag, Tag::Glue));
  }
  SUBCASE("blank answer") {
    const auto r = parse_response("<think>x</think><answer> \n </answer>", kCLS);
    CHECK(r.verdict.violations == only(ViolationCode::EmptyAnswer, Tag::Answer));
    REQUIRE(r.response);
  }
  SUBCASE("unparseable glue") {
    const auto r = parse_response("<think>x</think><glue>soon</glue><answer>a</answer>", kTAG);
    CHECK(r.verdict.violations == only(ViolationCode::UnparseableGlue, Tag::Glue));
    REQUIRE(r.response);
    CHECK_FALSE(r.response->glue);
  }
}

TEST_CASE("glue never affects validity outside grounding") {
  for (auto task : {kQA, kCLS, kReason}) {
    CAPTURE(task_name(task));
    CHECK(parse_response("<think>x</think><glue>soon</glue><answer>a</answer>", task).verdict.valid);
    CHECK(parse_response("<think>x</think><glue><glue><answer>a</answer>", task).verdict.valid);
    const auto r = parse_response("<think>x</think><glue>1, 2</glue><answer>a</answer>", task);
    REQUIRE(r.response);
    CHECK(r.response->glue == std::optional<TimeInterval>(TimeInterval{1, 2}));
  }
}

TEST_CASE("think requirement toggle") {
  CHECK_FALSE(parse_response("<answer>A</answer>", kQA).verdict.valid);
  CHECK(parse_response("<answer>A</answer>", kQA, {.require_think = false}).verdict.valid);
  // A present think must still be well formed.
  CHECK_FALSE(parse_response("<think>x<answer>A</answer>", kQA, {.require_think = false}).verdict.valid);
}

TEST_CASE("text outside tags is ignored and inner whitespace kept") {
  const auto r = parse_response("Sure! <think> a  b </think>\n<answer> C </answer> done", kQA);
  CHECK(r.verdict.valid);
  CHECK(r.response->think == std::optional<std::string>(" a  b "));
  CHECK(r.response->answer == " C ");
}

TEST_CASE("tags are case sensitive") {
  CHECK(parse_response("<THINK>x</THINK><answer>A</answer>", kQA).verdict.violations ==
        only(ViolationCode::MissingTag, Tag::Think));
}

TEST_CASE("parse_interval") {
  auto ok = [](const char* text, double s, double e, bool swapped = false) {
    CAPTURE(text);
    const auto p = parse_interval(text);
    REQUIRE(p);
    CHECK(p.interval->start == s);
    CHECK(p.interval->end == e);
    CHECK(p.out_of_order == swapped);
  };
  ok("3.0, 9.5", 3.0, 9.5);
  ok("9.5 to 3.0", 3.0, 9.5, true);
  ok("4-10", 4, 10);
  ok("4 - 10", 4, 10);
  ok(" 2 8 ", 2, 8);
  ok("0.5e1,6", 5, 6);
  ok("1 TO 2", 1, 2);
  ok("0, 0", 0, 0);

  CHECK(parse_interval("3.0").error == IntervalError::WrongArity);
  CHECK(parse_interval("").error == IntervalError::WrongArity);
  CHECK(parse_interval("1, 2, 3").error == IntervalError::WrongArity);
  CHECK(parse_interval("-3, 5").error == IntervalError::Negative);
  CHECK(parse_interval("3, -5").error == IntervalError::Negative);
  CHECK(parse_interval("3 to -5").error == IntervalError::Negative);
  CHECK(parse_interval("[3, 5]").error == IntervalError::Malformed);
  CHECK(parse_interval("3s, 5s").error == IntervalError::Malformed);
  CHECK(parse_interval("3,,5").error == IntervalError::Malformed);
  CHECK(parse_interval("1e999, 2").error == IntervalError::Malformed);
}

TEST_CASE("extract_choice ladder") {
  const auto abcd = lettered_options(4);
  auto label = [&](std::string_view text) { return extract_choice(text, abcd); };

  CHECK(label("B").label == std::optional<char>('B'));
  CHECK(label("B").rule == 1);
  CHECK(label(" b ").label == std::optional<char>('B'));
  const auto paren = label("The answer is (C).");
  CHECK(paren.label == std::optional<char>('C'));
  CHECK(paren.rule == 2);
  CHECK_FALSE(label("maybe"));
  CHECK(label("maybe").error == ChoiceError::NoMatch);

  CHECK(label("Answer: D").label == std::optional<char>('D'));
  CHECK(label("[a] is right").label == std::optional<char>('A'));
  CHECK(label("option c) fits").label == std::optional<char>('C'));
  CHECK(label("It is a dog, B.").label == std::optional<char>('B'));  // lower-case article skipped
  CHECK_FALSE(label("Eventually"));                                      // E is not an option

  const std::vector<ChoiceOption> texts{{'A', "A man runs"}, {'B', "Two cars collide"}, {'C', "two  CARS collide"}};
  CHECK(extract_choice("a man runs", texts).label == std::optional<char>('A'));
  CHECK(extract_choice("two cars collide", texts).error == ChoiceError::Ambiguous);

  const std::vector<ChoiceOption> dup{{'A', ""}, {'A', ""}};
  CHECK(extract_choice("A", dup).error == ChoiceError::InvalidOptions);
  CHECK(extract_choice("A", std::span<const ChoiceOption>{}).error == ChoiceError::InvalidOptions);
}

TEST_CASE("serialize and re-parse round trip") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> words{"a", "man", "falls", "B", "normal", " spaced ", "x\ny"};
  for (int i = 0; i < 500; ++i) {
    StructuredResponse r;
    if (rng() % 2) r.think = words[rng() % words.size()];
    r.answer = words[rng() % words.size()] + words[rng() % words.size()];
    if (rng() % 2) {
      const double a = static_cast<double>(rng() % 100000) / 1000.0;
      const double b = a + static_cast<double>(rng() % 100000) / 997.0;
      r.glue = TimeInterval{a, b};
    }
    const auto text = serialize(r);
    CAPTURE(text);
    const auto task = r.glue ? kTAG : kQA;
    const auto back = parse_response(text, task, {.require_think = r.think.has_value()});
    CHECK(back.verdict.valid);
    REQUIRE(back.response);
    CHECK(*back.response == r);
  }
}

TEST_CASE("agrees with the naive scanner on fuzzed input") {
  std::mt19937_64 rng(20260101);
  std::size_t valid_seen = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto raw = oracle::fuzz_response(rng);
    for (auto task : {kQA, kTAG, kCLS, kReason}) {
      for (bool require_think : {true, false}) {
        const auto expected = oracle::naive_scan(raw, task, require_think);
        const auto got = parse_response(raw, task, {.require_think = require_think});
        CAPTURE(raw);
        CAPTURE(task_name(task));
        CAPTURE(require_think);
        REQUIRE(got.verdict.valid == expected.valid);
        REQUIRE(got.verdict.valid == got.verdict.violations.empty());
        if (!expected.valid) continue;
        ++valid_seen;
        REQUIRE(got.response);
        CHECK(got.response->think == expected.think);
        CHECK(std::optional<std::string>(got.response->answer) == expected.answer);
        const auto glue = got.response->glue ? std::optional<std::pair<double, double>>(
                                                   std::make_pair(got.response->glue->start, got.response->glue->end))
                                             : std::nullopt;
        CHECK(glue == expected.glue);
      }
    }
  }
  CHECK(valid_seen > 1000);
}

TEST_CASE("parsing is deterministic") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto raw = oracle::fuzz_response(rng);
    const auto a = parse_response(raw, kTAG);
    const auto b = parse_response(raw, kTAG);
    CHECK(a.verdict.violations == b.verdict.violations);
    CHECK(a.response == b.response);
  }
}

TEST_CASE("describe") {
  CHECK(describe({ViolationCode::MissingTag, Tag::Glue}) == "MissingTag(glue)");
  CHECK(describe({ViolationCode::NestedTag, Tag::Think}) == "NestedTag(think)");
}
