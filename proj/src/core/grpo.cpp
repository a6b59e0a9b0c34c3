// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vaur::grpo {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void GrpoConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("grpo: beta must be >= 0");
  if (group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
  if (!(std_epsilon > 0.0)) throw std::invalid_argument("grpo: std_epsilon must be > 0");
  if (!std::isfinite(learning_rate)) throw std::invalid_argument("grpo: learning_rate must be finite");
}

GrpoConfig toy_defaults() {
  GrpoConfig config;
  config.learning_rate = 0.01;
  config.max_steps = 500;
  return config;
}

void CandidateGroup::validate() const {
  if (candidates.size() < 2) {
    throw std::invalid_argument("grpo: group '" + prompt_id + "' needs at least two candidates");
  }
  for (const auto& c : candidates) {
    if (!std::isfinite(c.logprob_old) || c.logprob_old > 0.0) {
      throw std::invalid_argument("grpo: group '" + prompt_id + "' has an invalid old log-probability");
    }
    if (std::isnan(c.logprob_ref) || c.logprob_ref > 0.0) {
      throw std::invalid_argument("grpo: group '" + prompt_id + "' has an invalid reference log-probability");
    }
  }
}

AdvantageSet normalize_rewards(std::span<const double> rewards, double epsilon) {
  if (rewards.size() < 2) throw std::invalid_argument("normalize_rewards: group size must be >= 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("normalize_rewards: epsilon must be > 0");

  const double m = static_cast<double>(rewards.size());
  AdvantageSet out;
  out.group_mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / m;
  double sq = 0.0;
  for (double r : rewards) sq += (r - out.group_mean) * (r - out.group_mean);
  out.group_std = std::sqrt(sq / m);

  out.values.assign(rewards.size(), 0.0);
  if (out.group_std > epsilon) {
    for (std::size_t j = 0; j < rewards.size(); ++j) {
      out.values[j] = (rewards[j] - out.group_mean) / out.group_std;
    }
  }
  return out;
}

double kl_divergence(std::span<const double> logprob_policy, std::span<const double> logprob_ref,
                     std::span<const double> probs_policy) {
  if (logprob_policy.size() != logprob_ref.size() || logprob_policy.size() != probs_policy.size()) {
    throw std::invalid_argument("kl_divergence: inputs must have equal length");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < logprob_policy.size(); ++i) {
    if (logprob_policy[i] == INFINITY || logprob_ref[i] == INFINITY) {
      throw std::invalid_argument("kl_divergence: log-probability of +inf");
    }
    if (probs_policy[i] <= 0.0) continue;
    kl += probs_policy[i] * (logprob_policy[i] - logprob_ref[i]);
  }
  return kl;
}

GrpoStepReport grpo_objective(const CandidateGroup& group, const AdvantageSet& advantages,
                              std::span<const double> logprob_new, double kl,
                              const GrpoConfig& config) {
  group.validate();
  const auto m = group.candidates.size();
  if (advantages.values.size() != m || logprob_new.size() != m) {
    throw std::invalid_argument("grpo_objective: advantages and log-probabilities must match the group size");
  }

  GrpoStepReport report;
  report.per_candidate_ratios.reserve(m);
  double surrogate = 0.0;
  double reward_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double ratio = std::exp(logprob_new[j] - group.candidates[j].logprob_old);
    if (!std::isfinite(ratio)) {
      throw std::runtime_error("grpo_objective: non-finite importance ratio in group '" +
                               group.prompt_id + "'; the policy has diverged");
    }
    report.per_candidate_ratios.push_back(ratio);
    surrogate += ratio * advantages.values[j];
    reward_sum += group.candidates[j].reward_total;
  }
  report.kl_value = kl;
  report.objective_value = surrogate - config.beta * kl;
  report.mean_reward = reward_sum / static_cast<double>(m);
  return report;
}

double exact_kl(const DifferentiablePolicy& policy, const DifferentiablePolicy& reference) {
  const auto lp = policy.log_probs();
  const auto lr = reference.log_probs();
  std::vector<double> p(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) p[i] = std::exp(lp[i]);
  return kl_divergence(lp, lr, p);
}

std::vector<double> grpo_gradient(const CandidateGroup& group, const AdvantageSet& advantages,
                                  const DifferentiablePolicy& policy,
                                  const DifferentiablePolicy& reference, const GrpoConfig& config) {
  group.validate();
  if (advantages.values.size() != group.candidates.size()) {
    throw std::invalid_argument("grpo_gradient: advantages must match the group size");
  }
  if (reference.support_size() != policy.support_size()) {
    throw std::invalid_argument("grpo_gradient: policy and reference supports differ");
  }

  std::vector<double> grad(policy.parameter_count(), 0.0);
  auto accumulate = [&grad](const std::vector<double>& g, double scale) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += scale * g[k];
  };

  for (std::size_t j = 0; j < group.candidates.size(); ++j) {
    const auto& c = group.candidates[j];
    const double adv = advantages.values[j];
    if (adv == 0.0) continue;
    const double ratio = std::exp(policy.log_prob(c.output_id) - c.logprob_old);
    // d ratio / d theta = ratio * d log pi / d theta
    accumulate(policy.log_prob_gradient(c.output_id), ratio * adv);
  }

  if (config.beta > 0.0) {
    // d KL / d theta = sum_i p_i (log p_i - log ref_i) d log p_i / d theta,
    // using sum_i p_i d log p_i = 0 to drop the constant term.
    const auto lp = policy.log_probs();
    const auto lr = reference.log_probs();
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double p = std::exp(lp[i]);
      if (p <= 0.0) continue;
      accumulate(policy.log_prob_gradient(i), -config.beta * p * (lp[i] - lr[i]));
    }
  }
  return grad;
}

GrpoStepReport train_step(std::span<const PromptSlot> prompts, const RewardFn& reward_fn,
                          const GrpoConfig& config, Rng& rng) {
  config.validate();
  if (prompts.empty()) throw std::invalid_argument("train_step: empty prompt batch");

  struct PendingUpdate {
    DifferentiablePolicy* policy;
    std::vector<double> grad;
  };
  std::vector<PendingUpdate> updates;

  GrpoStepReport report;
  std::size_t n_candidates = 0;
  std::map<rewards::Component, std::size_t> component_counts;
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    const auto& slot = prompts[k];
    if (slot.policy == nullptr || slot.reference == nullptr) {
      throw std::invalid_argument("train_step: prompt '" + slot.prompt_id + "' has no policy");
    }

    // The current parameters are the old-policy snapshot for this step.
    const auto draws = slot.policy->draw(config.group_size, rng);
    CandidateGroup group{slot.prompt_id, {}};
    std::vector<double> totals;
    for (const auto& d : draws) {
      rewards::RewardVector rv;
      try {
        rv = reward_fn(k, d.output_id);
      } catch (const std::exception& e) {
        throw std::runtime_error("train_step: reward failed for prompt '" + slot.prompt_id + "': " + e.what());
      }
      for (const auto& [component, value] : rv.components) {
        report.component_means[component] += value;
        ++component_counts[component];
      }
      group.candidates.push_back({d.output_id, rv.total, d.logprob, slot.reference->log_prob(d.output_id)});
      totals.push_back(rv.total);
    }
    n_candidates += draws.size();

    const auto advantages = normalize_rewards(totals, config.std_epsilon);
    std::vector<double> logprob_new;
    for (const auto& c : group.candidates) logprob_new.push_back(slot.policy->log_prob(c.output_id));
    const double kl = exact_kl(*slot.policy, *slot.reference);
    const auto step = grpo_objective(group, advantages, logprob_new, kl, config);
    if (!std::isfinite(step.objective_value)) {
      throw std::runtime_error("train_step: non-finite objective for prompt '" + slot.prompt_id + "'");
    }

    report.objective_value += step.objective_value;
    report.kl_value += step.kl_value;
    report.mean_reward += step.mean_reward * static_cast<double>(draws.size());
    report.per_candidate_ratios.insert(report.per_candidate_ratios.end(),
                                       step.per_candidate_ratios.begin(),
                                       step.per_candidate_ratios.end());

    auto grad = grpo_gradient(group, advantages, *slot.policy, *slot.reference, config);
    auto it = std::find_if(updates.begin(), updates.end(),
                           [&](const PendingUpdate& u) { return u.policy == slot.policy; });
    if (it == updates.end()) {
      updates.push_back({slot.policy, std::move(grad)});
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i) it->grad[i] += grad[i];
    }
  }

  for (auto& u : updates) {
    auto theta = u.policy->parameters();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] += config.learning_rate * u.grad[i];
      if (!std::isfinite(theta[i])) throw std::runtime_error("train_step: parameter update diverged");
    }
    u.policy->set_parameters(theta);
  }

  const double n_prompts = static_cast<double>(prompts.size());
  report.objective_value /= n_prompts;
  report.kl_value /= n_prompts;
  report.mean_reward /= static_cast<double>(n_candidates);
  for (auto& [component, value] : report.component_means) {
    value /= static_cast<double>(component_counts[component]);
  }
  return report;
}

}  // namespace vaur::grpo
