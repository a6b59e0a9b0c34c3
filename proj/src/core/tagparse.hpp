// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Structured-output grammar for model responses.
//
// A response carries its reasoning in <think>...</think>, its final answer in
// <answer>...</answer> and, for temporal grounding, the predicted span in
// <glue>...</glue>. Each tag pair must occur exactly once, think must come
// before answer, and no two pairs may overlap. Text outside the tags is
// ignored. Parsing never throws; every malformation becomes a violation.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace vaur::tags {

enum class Tag { Think, Answer, Glue };

enum class ViolationCode {
  MissingTag,
  DuplicateTag,
  NestedTag,
  UnparseableGlue,
  EmptyAnswer,
  TagOrder,
};

struct Violation {
  ViolationCode code;
  Tag tag;
  bool operator==(const Violation&) const = default;
};

struct FormatVerdict {
  TaskKind task = TaskKind::MultiChoiceQA;
  bool valid = true;
  std::vector<Violation> violations;

  bool has(ViolationCode code, Tag tag) const;
};

struct StructuredResponse {
  std::optional<std::string> think;
  std::string answer;
  std::optional<TimeInterval> glue;
  std::string raw;

  /// Compares the parsed segments; raw is provenance and not part of equality.
  bool operator==(const StructuredResponse& other) const {
    return think == other.think && answer == other.answer && glue == other.glue;
  }
};

struct ParseOptions {
  /// Whether a missing think pair is a format violation.
  bool require_think = true;
};

struct ParseResult {
  /// Present whenever exactly one well-ordered answer pair exists, even if the
  /// verdict is invalid.
  std::optional<StructuredResponse> response;
  FormatVerdict verdict;
};

ParseResult parse_response(std::string_view raw, TaskKind task, const ParseOptions& options = {});

enum class IntervalError { None, WrongArity, Negative, Malformed };

struct IntervalParse {
  std::optional<TimeInterval> interval;
  bool out_of_order = false;
  IntervalError error = IntervalError::None;

  explicit operator bool() const { return interval.has_value(); }
};

/// The span of the single well-formed glue pair, if its content parses.
std::optional<TimeInterval> extract_glue(std::string_view raw);

/// Reads two non-negative numbers separated by a comma, "to", a hyphen or
/// plain whitespace. Swapped endpoints are reordered and flagged.
IntervalParse parse_interval(std::string_view text);

struct ChoiceOption {
  char label = 'A';
  std::string text;

  bool operator==(const ChoiceOption&) const = default;
};

/// Options labelled A, B, ... with empty texts.
std::vector<ChoiceOption> lettered_options(std::size_t count);

enum class ChoiceError { None, NoMatch, Ambiguous, InvalidOptions };

struct ChoiceResult {
  std::optional<char> label;
  /// Ladder rule that produced the label (1-3), 0 on failure.
  int rule = 0;
  ChoiceError error = ChoiceError::None;

  explicit operator bool() const { return label.has_value(); }
};

/// Maps a free-text answer to an option label. Rules are tried in order:
///  1. the whole answer is a label, ignoring case and surrounding whitespace;
///  2. the first standalone label token, e.g. "C", "(c)", "[C]", "c)", "C." or
///     "C:". Lower-case letters count only when bracketed or followed by ")",
///     so that the article "a" is skipped;
///  3. the whole answer equals one option's text, ignoring case and spacing.
/// Labels must be distinct upper-case letters.
ChoiceResult extract_choice(std::string_view answer, std::span<const ChoiceOption> options);

/// Renders a response back into tagged text.
std::string serialize(const StructuredResponse& response);

std::string_view tag_name(Tag tag);
std::string_view violation_name(ViolationCode code);
std::string describe(const Violation& violation);

}  // namespace vaur::tags
