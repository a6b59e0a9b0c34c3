// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "types.hpp"

#include <cctype>
#include <cmath>

namespace vaur {

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::MultiChoiceQA: return "qa";
    case TaskKind::TemporalGrounding: return "tag";
    case TaskKind::Reasoning: return "reason";
    case TaskKind::Classification: return "cls";
  }
  return "unknown";
}

std::optional<TaskKind> parse_task_name(std::string_view name) {
  if (name == "qa") return TaskKind::MultiChoiceQA;
  if (name == "tag") return TaskKind::TemporalGrounding;
  if (name == "reason") return TaskKind::Reasoning;
  if (name == "cls") return TaskKind::Classification;
  return std::nullopt;
}

bool TimeInterval::valid() const {
  return std::isfinite(start) && std::isfinite(end) && start >= 0.0 && end >= start;
}

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::string normalize_label(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace vaur
