// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Group-relative policy optimization.
//
// For every prompt the old policy proposes M candidates. Their scalar rewards
// are standardized inside the group, and the policy maximizes
//
//   sum_j  pi(o_j) / pi_old(o_j) * A_j  -  beta * KL(pi || pi_ref)
//
// where A_j is the standardized reward. The KL term is evaluated exactly over
// the policy's full (enumerable) support.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rewards.hpp"

namespace vaur::grpo {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
double uniform01(Rng& rng);

struct GrpoConfig {
  double beta = 0.04;
  std::size_t group_size = 4;
  double std_epsilon = 1e-8;
  double learning_rate = 2e-5;
  std::size_t max_steps = 1500;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on beta < 0, group_size < 2 or std_epsilon <= 0.
  void validate() const;
};

/// Settings for the enumerable toy policy: 500 steps of plain gradient ascent
/// on logits with learning rate 0.01. The step must keep lr * beta * 0.5
/// below 2 for the KL term to stay stable at large beta (beta = 1000 works).
GrpoConfig toy_defaults();

struct Candidate {
  std::size_t output_id = 0;
  double reward_total = 0.0;
  double logprob_old = 0.0;
  double logprob_ref = 0.0;
};

struct CandidateGroup {
  std::string prompt_id;
  std::vector<Candidate> candidates;

  void validate() const;
};

struct AdvantageSet {
  std::vector<double> values;
  double group_mean = 0.0;
  double group_std = 0.0;
};

struct GrpoStepReport {
  double objective_value = 0.0;
  double mean_reward = 0.0;
  double kl_value = 0.0;
  std::vector<double> per_candidate_ratios;
  std::map<rewards::Component, double> component_means;
};

/// Standardizes rewards with the population (divide-by-M) deviation. Groups
/// with std <= epsilon get all-zero advantages. Throws on M < 2.
AdvantageSet normalize_rewards(std::span<const double> rewards, double epsilon);

/// Exact KL(p || ref) = sum p (log p - log ref) with 0 log 0 = 0.
double kl_divergence(std::span<const double> logprob_policy, std::span<const double> logprob_ref,
                     std::span<const double> probs_policy);

/// Evaluates the objective for given new-policy log-probabilities. No ratio
/// clipping is applied.
GrpoStepReport grpo_objective(const CandidateGroup& group, const AdvantageSet& advantages,
                              std::span<const double> logprob_new, double kl,
                              const GrpoConfig& config);

struct Draw {
  std::size_t output_id = 0;
  double logprob = 0.0;
};

/// A policy over a finite support with differentiable log-probabilities.
class DifferentiablePolicy {
 public:
  virtual ~DifferentiablePolicy() = default;

  virtual std::size_t support_size() const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual std::vector<double> log_probs() const = 0;
  virtual double log_prob(std::size_t output_id) const = 0;
  /// d log pi(output_id) / d theta.
  virtual std::vector<double> log_prob_gradient(std::size_t output_id) const = 0;
  /// m i.i.d. draws with replacement.
  virtual std::vector<Draw> draw(std::size_t m, Rng& rng) const = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> theta) = 0;
};

/// Exact KL(policy || reference) over the shared support.
double exact_kl(const DifferentiablePolicy& policy, const DifferentiablePolicy& reference);

/// Objective gradient with respect to the policy parameters. Advantages and
/// old log-probabilities are constants; the KL term is differentiated through
/// the policy.
std::vector<double> grpo_gradient(const CandidateGroup& group, const AdvantageSet& advantages,
                                  const DifferentiablePolicy& policy,
                                  const DifferentiablePolicy& reference, const GrpoConfig& config);

struct PromptSlot {
  std::string prompt_id;
  DifferentiablePolicy* policy = nullptr;
  const DifferentiablePolicy* reference = nullptr;
};

using RewardFn = std::function<rewards::RewardVector(std::size_t prompt_index, std::size_t output_id)>;

/// One on-policy update: the old policy is the current one, so all importance
/// ratios start at 1. Rewards for every prompt are scored before any
/// parameter changes. Objective and KL in the report are averaged over
/// prompts; mean reward over all candidates; each component mean over the
/// candidates that scored that component.
GrpoStepReport train_step(std::span<const PromptSlot> prompts, const RewardFn& reward_fn,
                          const GrpoConfig& config, Rng& rng);

}  // namespace vaur::grpo
