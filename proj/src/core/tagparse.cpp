// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "tagparse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace vaur::tags {

namespace {

std::string_view open_token(Tag tag) {
  switch (tag) {
    case Tag::Think: return "<think>";
    case Tag::Answer: return "<answer>";
    case Tag::Glue: return "<glue>";
  }
  return "";
}

std::string_view close_token(Tag tag) {
  switch (tag) {
    case Tag::Think: return "</think>";
    case Tag::Answer: return "</answer>";
    case Tag::Glue: return "</glue>";
  }
  return "";
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

struct PairScan {
  enum class State { Absent, WellFormed, Malformed };
  State state = State::Absent;
  ViolationCode code = ViolationCode::MissingTag;
  std::size_t open = 0;   // offset of the opening tag
  std::size_t close = 0;  // offset one past the closing tag
  std::string_view content;
};

PairScan scan_pair(std::string_view raw, Tag tag) {
  const auto open_tok = open_token(tag);
  const auto close_tok = close_token(tag);
  const auto n_open = count_occurrences(raw, open_tok);
  const auto n_close = count_occurrences(raw, close_tok);

  PairScan scan;
  if (n_open == 0 && n_close == 0) return scan;
  scan.state = PairScan::State::Malformed;
  if (n_open > 1 || n_close > 1) {
    scan.code = ViolationCode::DuplicateTag;
    return scan;
  }
  if (n_open != n_close) {
    scan.code = ViolationCode::MissingTag;
    return scan;
  }
  const auto open_pos = raw.find(open_tok);
  const auto close_pos = raw.find(close_tok);
  if (close_pos < open_pos + open_tok.size()) {
    scan.code = ViolationCode::TagOrder;
    return scan;
  }
  scan.state = PairScan::State::WellFormed;
  scan.open = open_pos;
  scan.close = close_pos + close_tok.size();
  const auto begin = open_pos + open_tok.size();
  scan.content = raw.substr(begin, close_pos - begin);
  return scan;
}

bool overlaps(const PairScan& a, const PairScan& b) {
  return a.open < b.close && b.open < a.close;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char to_upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }

// Length of the numeric literal at the start of text, or 0.
std::size_t scan_number(std::string_view text) {
  std::size_t i = 0;
  std::size_t digits = 0;
  while (i < text.size() && is_digit(text[i])) ++i, ++digits;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && is_digit(text[i])) ++i, ++digits;
  }
  if (digits == 0) return 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
    const std::size_t exp_start = j;
    while (j < text.size() && is_digit(text[j])) ++j;
    if (j > exp_start) i = j;
  }
  return i;
}

std::string format_number(double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), end);
}

}  // namespace

bool FormatVerdict::has(ViolationCode code, Tag tag) const {
  return std::find(violations.begin(), violations.end(), Violation{code, tag}) != violations.end();
}

IntervalParse parse_interval(std::string_view text) {
  enum class Kind { Number, Comma, To, Dash };
  struct Token {
    Kind kind;
    double value = 0.0;
    bool spaced = false;  // whitespace precedes the token
  };

  IntervalParse result;
  std::vector<Token> tokens;
  bool spaced = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      spaced = true;
      ++i;
      continue;
    }
    if (const auto len = scan_number(text.substr(i)); len > 0) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + i + len, value);
      if (ec != std::errc() || ptr != text.data() + i + len || !std::isfinite(value)) {
        result.error = IntervalError::Malformed;
        return result;
      }
      tokens.push_back({Kind::Number, value, spaced});
      i += len;
    } else if (c == ',') {
      tokens.push_back({Kind::Comma, 0.0, spaced});
      ++i;
    } else if (c == '-') {
      tokens.push_back({Kind::Dash, 0.0, spaced});
      ++i;
    } else if ((c == 't' || c == 'T') && i + 1 < text.size() &&
               (text[i + 1] == 'o' || text[i + 1] == 'O')) {
      tokens.push_back({Kind::To, 0.0, spaced});
      i += 2;
    } else {
      result.error = IntervalError::Malformed;
      return result;
    }
    spaced = false;
  }

  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
    if (tokens[k].kind == Kind::Dash && tokens[k + 1].kind == Kind::Number &&
        (k == 0 || tokens[k - 1].kind != Kind::Number)) {
      result.error = IntervalError::Negative;
      return result;
    }
  }

  const auto n_numbers = std::count_if(tokens.begin(), tokens.end(),
                                       [](const Token& t) { return t.kind == Kind::Number; });
  if (n_numbers != 2) {
    result.error = IntervalError::WrongArity;
    return result;
  }

  const bool bare_pair = tokens.size() == 2 && tokens[0].kind == Kind::Number &&
                         tokens[1].kind == Kind::Number && tokens[1].spaced;
  const bool separated_pair = tokens.size() == 3 && tokens[0].kind == Kind::Number &&
                              tokens[1].kind != Kind::Number && tokens[2].kind == Kind::Number;
  if (!bare_pair && !separated_pair) {
    result.error = IntervalError::Malformed;
    return result;
  }

  double first = tokens.front().value;
  double second = tokens.back().value;
  if (first > second) {
    std::swap(first, second);
    result.out_of_order = true;
  }
  result.interval = TimeInterval{first, second};
  return result;
}

std::optional<TimeInterval> extract_glue(std::string_view raw) {
  const PairScan glue = scan_pair(raw, Tag::Glue);
  if (glue.state != PairScan::State::WellFormed) return std::nullopt;
  return parse_interval(glue.content).interval;
}

ParseResult parse_response(std::string_view raw, TaskKind task, const ParseOptions& options) {
  ParseResult result;
  FormatVerdict& verdict = result.verdict;
  verdict.task = task;
  const bool grounding = task == TaskKind::TemporalGrounding;

  const PairScan think = scan_pair(raw, Tag::Think);
  const PairScan answer = scan_pair(raw, Tag::Answer);
  const PairScan glue = scan_pair(raw, Tag::Glue);
  using State = PairScan::State;

  auto check_structure = [&](const PairScan& scan, Tag tag, bool required) {
    if (scan.state == State::Absent && required) {
      verdict.violations.push_back({ViolationCode::MissingTag, tag});
    } else if (scan.state == State::Malformed) {
      verdict.violations.push_back({scan.code, tag});
    }
  };
  check_structure(think, Tag::Think, options.require_think);
  check_structure(answer, Tag::Answer, true);
  if (grounding) check_structure(glue, Tag::Glue, true);

  // Overlap among well-formed pairs that belong to this task's grammar.
  std::vector<std::pair<Tag, const PairScan*>> formed;
  if (think.state == State::WellFormed) formed.emplace_back(Tag::Think, &think);
  if (answer.state == State::WellFormed) formed.emplace_back(Tag::Answer, &answer);
  if (grounding && glue.state == State::WellFormed) formed.emplace_back(Tag::Glue, &glue);
  for (std::size_t a = 0; a < formed.size(); ++a) {
    for (std::size_t b = a + 1; b < formed.size(); ++b) {
      if (!overlaps(*formed[a].second, *formed[b].second)) continue;
      const Tag inner = formed[a].second->open > formed[b].second->open ? formed[a].first
                                                                         : formed[b].first;
      verdict.violations.push_back({ViolationCode::NestedTag, inner});
    }
  }

  if (think.state == State::WellFormed && answer.state == State::WellFormed &&
      !overlaps(think, answer) && think.open > answer.open) {
    verdict.violations.push_back({ViolationCode::TagOrder, Tag::Think});
  }

  if (answer.state == State::WellFormed && trim(answer.content).empty()) {
    verdict.violations.push_back({ViolationCode::EmptyAnswer, Tag::Answer});
  }

  std::optional<TimeInterval> glue_interval;
  if (glue.state == State::WellFormed) {
    const auto parsed = parse_interval(glue.content);
    if (parsed) {
      glue_interval = parsed.interval;
    } else if (grounding) {
      verdict.violations.push_back({ViolationCode::UnparseableGlue, Tag::Glue});
    }
  }

  verdict.valid = verdict.violations.empty();

  if (answer.state == State::WellFormed) {
    StructuredResponse response;
    if (think.state == State::WellFormed) response.think = std::string(think.content);
    response.answer = std::string(answer.content);
    response.glue = glue_interval;
    response.raw = std::string(raw);
    result.response = std::move(response);
  }
  return result;
}

std::vector<ChoiceOption> lettered_options(std::size_t count) {
  std::vector<ChoiceOption> options;
  for (std::size_t i = 0; i < count && i < 26; ++i) {
    options.push_back({static_cast<char>('A' + i), {}});
  }
  return options;
}

ChoiceResult extract_choice(std::string_view answer, std::span<const ChoiceOption> options) {
  ChoiceResult result;
  if (options.empty()) {
    result.error = ChoiceError::InvalidOptions;
    return result;
  }
  std::array<bool, 26> is_label{};
  for (const auto& option : options) {
    if (option.label < 'A' || option.label > 'Z' || is_label[option.label - 'A']) {
      result.error = ChoiceError::InvalidOptions;
      return result;
    }
    is_label[option.label - 'A'] = true;
  }
  auto label_of = [&](char c) -> std::optional<char> {
    const char upper = to_upper(c);
    if (upper >= 'A' && upper <= 'Z' && is_label[upper - 'A']) return upper;
    return std::nullopt;
  };

  // Rule 1: the answer is a bare label.
  const auto trimmed = trim(answer);
  if (trimmed.size() == 1) {
    if (auto label = label_of(trimmed[0])) {
      result.label = label;
      result.rule = 1;
      return result;
    }
  }

  // Rule 2: first standalone label token.
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    const char c = trimmed[i];
    const auto label = label_of(c);
    if (!label) continue;
    const char prev = i > 0 ? trimmed[i - 1] : ' ';
    const char next = i + 1 < trimmed.size() ? trimmed[i + 1] : ' ';
    if (is_alnum(prev) || is_alnum(next)) continue;
    const bool wrapped = (prev == '(' || prev == '[') && (next == ')' || next == ']');
    if (c == *label || wrapped || next == ')') {
      result.label = label;
      result.rule = 2;
      return result;
    }
  }

  // Rule 3: the answer repeats one option's text.
  const auto needle = normalize_label(trimmed);
  if (!needle.empty()) {
    std::optional<char> found;
    for (const auto& option : options) {
      if (option.text.empty() || normalize_label(option.text) != needle) continue;
      if (found && *found != option.label) {
        result.error = ChoiceError::Ambiguous;
        return result;
      }
      found = option.label;
    }
    if (found) {
      result.label = found;
      result.rule = 3;
      return result;
    }
  }

  result.error = ChoiceError::NoMatch;
  return result;
}

std::string serialize(const StructuredResponse& response) {
  std::string out;
  if (response.think) out += "<think>" + *response.think + "</think>";
  if (response.glue) {
    out += "<glue>" + format_number(response.glue->start) + ", " +
           format_number(response.glue->end) + "</glue>";
  }
  out += "<answer>" + response.answer + "</answer>";
  return out;
}

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::Think: return "think";
    case Tag::Answer: return "answer";
    case Tag::Glue: return "glue";
  }
  return "unknown";
}

std::string_view violation_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::MissingTag: return "MissingTag";
    case ViolationCode::DuplicateTag: return "DuplicateTag";
    case ViolationCode::NestedTag: return "NestedTag";
    case ViolationCode::UnparseableGlue: return "UnparseableGlue";
    case ViolationCode::EmptyAnswer: return "EmptyAnswer";
    case ViolationCode::TagOrder: return "TagOrder";
  }
  return "Unknown";
}

std::string describe(const Violation& violation) {
  return std::string(violation_name(violation.code)) + "(" + std::string(tag_name(violation.tag)) + ")";
}

}  // namespace vaur::tags
