// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace vaur {

enum class TaskKind { MultiChoiceQA, TemporalGrounding, Reasoning, Classification };

/// Short command-line name of a task: "qa", "tag", "reason" or "cls".
std::string_view task_name(TaskKind task);
std::optional<TaskKind> parse_task_name(std::string_view name);

/// An anomaly span in seconds. Valid when end >= start >= 0 and both are finite.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool valid() const;
  bool operator==(const TimeInterval&) const = default;
};

std::string_view trim(std::string_view text);

/// Case-folds ASCII letters, trims, and collapses runs of internal whitespace
/// to a single space.
std::string normalize_label(std::string_view text);

}  // namespace vaur
