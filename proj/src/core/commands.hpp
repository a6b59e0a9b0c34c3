// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Command implementations shared by the C API and the CLI. Every command
// returns an exit code instead of throwing: 0 success, 1 data-level failure,
// 2 usage or configuration error.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dataset.hpp"
#include "grpo.hpp"
#include "judge.hpp"
#include "types.hpp"

namespace vaur::cli {

enum class ExitCode : int { Success = 0, DataError = 1, UsageError = 2 };

enum class ThinkFilter { Both, On, Off };

std::optional<ThinkFilter> parse_think_filter(std::string_view text);

struct RunConfig {
  std::filesystem::path annotations;
  std::filesystem::path predictions;
  std::filesystem::path output_dir = ".";
  /// Empty means the builtin taxonomy.
  std::filesystem::path taxonomy;
  /// Output of a previous judge run, consumed by score.
  std::filesystem::path judge_scores;
  std::optional<TaskKind> task;
  ThinkFilter think = ThinkFilter::Both;
  std::uint64_t seed = 0;
  std::optional<double> beta;
  std::optional<std::size_t> group_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> steps;
  judge::JudgeConfig judge;
  bool force = false;
  int verbosity = 0;

  /// Toy defaults with the overrides and seed applied.
  grpo::GrpoConfig grpo_config() const;
  judge::JudgeConfig judge_config() const;
};

struct CommandResult {
  ExitCode code = ExitCode::Success;
  /// Human-readable report, also written to the output directory when the
  /// command has a text report.
  std::string summary;
  std::string error;
};

/// rejections.jsonl, stats.json.
CommandResult cmd_validate(const RunConfig& config);
/// metrics.json, metrics.txt, per_sample.jsonl, join_report.json, iou_histogram.csv.
CommandResult cmd_score(const RunConfig& config);
/// train_log.jsonl, reward_curve.csv, summary.json, summary.txt.
CommandResult cmd_train_toy(const RunConfig& config);
/// judge_scores.jsonl: one line per joined reasoning pair, then the aggregate.
CommandResult cmd_judge(const RunConfig& config);

/// Model texts for the judge: the think segment is the description and the
/// answer segment the analysis; a missing segment falls back to the whole text.
judge::JudgeRequest judge_request_for(const dataset::AnnotationRecord& record,
                                      const metrics::PredictionRecord& prediction);

}  // namespace vaur::cli
