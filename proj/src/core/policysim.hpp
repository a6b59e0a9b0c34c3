// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale policy used to exercise GRPO end to end: one softmax over a
// fixed list of complete tagged responses per prompt.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grpo.hpp"
#include "rewards.hpp"
#include "tagparse.hpp"

namespace vaur::policysim {

class SoftmaxPolicy final : public grpo::DifferentiablePolicy {
 public:
  explicit SoftmaxPolicy(std::vector<double> logits, double temperature = 1.0);

  std::span<const double> logits() const { return logits_; }
  double temperature() const { return temperature_; }
  std::vector<double> probabilities() const;

  std::size_t support_size() const override { return logits_.size(); }
  std::size_t parameter_count() const override { return logits_.size(); }
  std::vector<double> log_probs() const override;
  double log_prob(std::size_t output_id) const override;
  std::vector<double> log_prob_gradient(std::size_t output_id) const override;
  std::vector<grpo::Draw> draw(std::size_t m, grpo::Rng& rng) const override;
  std::vector<double> parameters() const override { return logits_; }
  void set_parameters(std::span<const double> theta) override;

 private:
  std::vector<double> logits_;
  double temperature_;
};

struct ToyPrompt {
  std::string prompt_id;
  TaskKind task = TaskKind::MultiChoiceQA;
  std::vector<std::string> candidate_texts;
  rewards::GroundTruth truth;
};

struct LogProbGrad {
  double logprob = 0.0;
  std::vector<double> grad;
};

/// log softmax(logits / T)[id] and its gradient (onehot(id) - p) / T.
LogProbGrad logprob_and_grad(const SoftmaxPolicy& policy, std::size_t output_id);

/// m >= 2 draws with replacement, each with its log-probability at draw time.
std::vector<grpo::Draw> sample(const SoftmaxPolicy& policy, const ToyPrompt& prompt, std::size_t m,
                               std::uint64_t seed);

/// Fixed suite of QA, grounding and classification prompts. Each candidate is
/// a full tagged response and every prompt has a unique best candidate.
std::vector<ToyPrompt> make_benchmark_suite();

/// Runs every candidate of a prompt through the parser and reward functions.
std::vector<rewards::RewardVector> score_candidates(const ToyPrompt& prompt,
                                                    const rewards::RewardConfig& reward_config = {},
                                                    const tags::ParseOptions& parse_options = {});

struct ToyEvaluation {
  /// Exact expected total reward, averaged over prompts.
  double expected_reward = 0.0;
  std::map<TaskKind, double> expected_reward_by_task;
  /// Exact KL to the frozen reference, averaged over prompts.
  double kl = 0.0;
  /// Fraction of prompts whose strict argmax is the reward-maximal candidate.
  double argmax_correct_fraction = 0.0;
  std::vector<bool> argmax_correct;
};

struct ToyLogRow {
  std::size_t step = 0;
  ToyEvaluation eval;
  /// Statistics of the update that produced this row; absent for step 0.
  std::optional<grpo::GrpoStepReport> train;
};

struct ToyTrainingResult {
  std::vector<ToyLogRow> rows;
  std::vector<std::vector<double>> final_logits;

  const ToyEvaluation& initial() const { return rows.front().eval; }
  const ToyEvaluation& final() const { return rows.back().eval; }
};

/// Numerical failure during training. Carries the rows logged before it.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, std::vector<ToyLogRow> rows, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step), rows_(std::move(rows)) {}
  std::size_t step() const { return step_; }
  const std::vector<ToyLogRow>& rows() const { return rows_; }

 private:
  std::size_t step_;
  std::vector<ToyLogRow> rows_;
};

/// Trains one zero-initialized policy per prompt for config.max_steps steps,
/// with the reference frozen at initialization and the sampler seeded from
/// config.seed.
ToyTrainingResult train_toy(const grpo::GrpoConfig& config, const std::vector<ToyPrompt>& suite,
                            const rewards::RewardConfig& reward_config = {},
                            const tags::ParseOptions& parse_options = {});

}  // namespace vaur::policysim
