// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Rule-based rewards for the four VAU tasks and their weighted sum.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagparse.hpp"
#include "types.hpp"

namespace vaur::rewards {

enum class Component { Format, Accuracy, TIoU };

std::string_view component_name(Component component);

struct GroundTruth {
  TaskKind task = TaskKind::MultiChoiceQA;
  /// Option label ("B") for QA, class label for classification.
  std::optional<std::string> correct_answer;
  std::optional<TimeInterval> anomaly_interval;
  bool is_normal = false;
  /// QA options; only the labels matter unless the answer repeats option text.
  std::vector<tags::ChoiceOption> options = tags::lettered_options(4);

  /// Throws std::invalid_argument when the fields contradict each other.
  void validate() const;
};

struct RewardConfig {
  /// Per-task weights; a missing entry means weight 1.
  std::map<TaskKind, std::map<Component, double>> weights;
  /// Answers that declare a video normal, compared after normalize_label().
  std::vector<std::string> normal_tokens{"normal"};

  double weight(TaskKind task, Component component) const;
};

struct RewardVector {
  std::map<Component, double> components;
  std::map<Component, double> weights;
  double total = 0.0;
};

/// Component set scored for a task.
std::vector<Component> components_for(TaskKind task);

double format_reward(const tags::FormatVerdict& verdict);

/// 1 when the response answers correctly. For grounding, correct means the
/// normal/anomalous declaration matches the truth. A missing response scores 0.
double accuracy_reward(const tags::StructuredResponse* response, const GroundTruth& truth,
                       const RewardConfig& config = {});

/// Intersection over union of two spans. Two identical points score 1; any
/// other zero-length union scores 0.
double temporal_iou(const TimeInterval& pred, const TimeInterval& truth);

/// Normal when the glue span is absent and the answer is a normal token.
bool declares_normal(const tags::StructuredResponse& response, const RewardConfig& config = {});

double tiou_reward(const tags::StructuredResponse* response, const GroundTruth& truth,
                   const RewardConfig& config = {});

/// Scores one parsed response. Throws std::invalid_argument when the verdict
/// was produced for a different task than the ground truth.
RewardVector task_reward(const tags::StructuredResponse* response, const tags::FormatVerdict& verdict,
                         const GroundTruth& truth, const RewardConfig& config = {});

inline RewardVector task_reward(const tags::ParseResult& parsed, const GroundTruth& truth,
                                const RewardConfig& config = {}) {
  return task_reward(parsed.response ? &*parsed.response : nullptr, parsed.verdict, truth, config);
}

}  // namespace vaur::rewards
