// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "rewards.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace vaur::rewards {

std::string_view component_name(Component component) {
  switch (component) {
    case Component::Format: return "format";
    case Component::Accuracy: return "accuracy";
    case Component::TIoU: return "tiou";
  }
  return "unknown";
}

void GroundTruth::validate() const {
  if (is_normal && anomaly_interval) {
    throw std::invalid_argument("ground truth: a normal video cannot carry an anomaly interval");
  }
  if (anomaly_interval && !anomaly_interval->valid()) {
    throw std::invalid_argument("ground truth: anomaly interval must satisfy end >= start >= 0");
  }
  switch (task) {
    case TaskKind::TemporalGrounding:
      if (!is_normal && !anomaly_interval) {
        throw std::invalid_argument("ground truth: anomalous grounding sample needs an interval");
      }
      break;
    case TaskKind::MultiChoiceQA:
    case TaskKind::Classification:
      if (!correct_answer) throw std::invalid_argument("ground truth: correct answer missing");
      break;
    case TaskKind::Reasoning:
      break;
  }
}

double RewardConfig::weight(TaskKind task, Component component) const {
  if (auto t = weights.find(task); t != weights.end()) {
    if (auto c = t->second.find(component); c != t->second.end()) return c->second;
  }
  return 1.0;
}

std::vector<Component> components_for(TaskKind task) {
  switch (task) {
    case TaskKind::TemporalGrounding:
      return {Component::Format, Component::Accuracy, Component::TIoU};
    case TaskKind::MultiChoiceQA:
    case TaskKind::Classification:
      return {Component::Format, Component::Accuracy};
    case TaskKind::Reasoning:
      return {Component::Format};
  }
  return {};
}

double format_reward(const tags::FormatVerdict& verdict) { return verdict.valid ? 1.0 : 0.0; }

bool declares_normal(const tags::StructuredResponse& response, const RewardConfig& config) {
  if (response.glue) return false;
  const auto answer = normalize_label(response.answer);
  return std::any_of(config.normal_tokens.begin(), config.normal_tokens.end(),
                     [&](const std::string& token) { return normalize_label(token) == answer; });
}

double accuracy_reward(const tags::StructuredResponse* response, const GroundTruth& truth,
                       const RewardConfig& config) {
  if (response == nullptr) return 0.0;
  switch (truth.task) {
    case TaskKind::MultiChoiceQA: {
      if (!truth.correct_answer) return 0.0;
      const auto choice = tags::extract_choice(response->answer, truth.options);
      const auto expected = trim(*truth.correct_answer);
      return choice && expected.size() == 1 &&
                     std::toupper(static_cast<unsigned char>(expected[0])) == *choice.label
                 ? 1.0
                 : 0.0;
    }
    case TaskKind::Classification:
      if (!truth.correct_answer) return 0.0;
      return normalize_label(response->answer) == normalize_label(*truth.correct_answer) ? 1.0 : 0.0;
    case TaskKind::TemporalGrounding:
      return declares_normal(*response, config) == truth.is_normal ? 1.0 : 0.0;
    case TaskKind::Reasoning:
      return 0.0;
  }
  return 0.0;
}

double temporal_iou(const TimeInterval& pred, const TimeInterval& truth) {
  const double inter = std::max(0.0, std::min(pred.end, truth.end) - std::max(pred.start, truth.start));
  const double uni = pred.length() + truth.length() - inter;
  if (uni <= 0.0) return pred == truth ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double tiou_reward(const tags::StructuredResponse* response, const GroundTruth& truth,
                   const RewardConfig& config) {
  if (response == nullptr) return 0.0;
  const bool normal = declares_normal(*response, config);
  if (truth.is_normal) return normal ? 1.0 : 0.0;
  if (normal || !response->glue || !truth.anomaly_interval) return 0.0;
  return temporal_iou(*response->glue, *truth.anomaly_interval);
}

RewardVector task_reward(const tags::StructuredResponse* response, const tags::FormatVerdict& verdict,
                         const GroundTruth& truth, const RewardConfig& config) {
  if (verdict.task != truth.task) {
    throw std::invalid_argument("task_reward: verdict task '" + std::string(task_name(verdict.task)) +
                                "' does not match ground truth task '" +
                                std::string(task_name(truth.task)) + "'");
  }
  RewardVector out;
  for (const auto component : components_for(truth.task)) {
    double value = 0.0;
    switch (component) {
      case Component::Format: value = format_reward(verdict); break;
      case Component::Accuracy: value = accuracy_reward(response, truth, config); break;
      case Component::TIoU: value = tiou_reward(response, truth, config); break;
    }
    const double weight = config.weight(truth.task, component);
    out.components[component] = value;
    out.weights[component] = weight;
    out.total += weight * value;
  }
  return out;
}

}  // namespace vaur::rewards
