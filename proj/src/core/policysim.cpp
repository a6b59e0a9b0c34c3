// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "policysim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace vaur::policysim {

SoftmaxPolicy::SoftmaxPolicy(std::vector<double> logits, double temperature)
    : logits_(std::move(logits)), temperature_(temperature) {
  if (logits_.empty()) throw std::invalid_argument("SoftmaxPolicy: empty support");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    throw std::invalid_argument("SoftmaxPolicy: temperature must be positive and finite");
  }
  set_parameters(logits_);
}

void SoftmaxPolicy::set_parameters(std::span<const double> theta) {
  if (theta.size() != logits_.size()) throw std::invalid_argument("SoftmaxPolicy: parameter size mismatch");
  for (double v : theta) {
    if (!std::isfinite(v)) throw std::invalid_argument("SoftmaxPolicy: non-finite logit");
  }
  std::copy(theta.begin(), theta.end(), logits_.begin());
}

std::vector<double> SoftmaxPolicy::log_probs() const {
  std::vector<double> z(logits_.size());
  double zmax = -INFINITY;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = logits_[i] / temperature_;
    zmax = std::max(zmax, z[i]);
  }
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  for (double& v : z) v -= lse;
  return z;
}

std::vector<double> SoftmaxPolicy::probabilities() const {
  auto p = log_probs();
  for (double& v : p) v = std::exp(v);
  return p;
}

double SoftmaxPolicy::log_prob(std::size_t output_id) const {
  if (output_id >= logits_.size()) throw std::out_of_range("SoftmaxPolicy: output id out of range");
  return log_probs()[output_id];
}

std::vector<double> SoftmaxPolicy::log_prob_gradient(std::size_t output_id) const {
  if (output_id >= logits_.size()) throw std::out_of_range("SoftmaxPolicy: output id out of range");
  auto grad = probabilities();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = ((i == output_id ? 1.0 : 0.0) - grad[i]) / temperature_;
  }
  return grad;
}

std::vector<grpo::Draw> SoftmaxPolicy::draw(std::size_t m, grpo::Rng& rng) const {
  const auto lp = log_probs();
  std::vector<double> cdf(lp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    acc += std::exp(lp[i]);
    cdf[i] = acc;
  }
  std::vector<grpo::Draw> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double u = grpo::uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t id = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    // Rounding can land u on a flat stretch of the cdf; step back to a
    // candidate with non-zero mass.
    while (id > 0 && std::exp(lp[id]) == 0.0) --id;
    out.push_back({id, lp[id]});
  }
  return out;
}

LogProbGrad logprob_and_grad(const SoftmaxPolicy& policy, std::size_t output_id) {
  return {policy.log_prob(output_id), policy.log_prob_gradient(output_id)};
}

std::vector<grpo::Draw> sample(const SoftmaxPolicy& policy, const ToyPrompt& prompt, std::size_t m,
                               std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("sample: m must be >= 2");
  if (prompt.candidate_texts.size() != policy.support_size()) {
    throw std::invalid_argument("sample: policy support does not match prompt '" + prompt.prompt_id + "'");
  }
  grpo::Rng rng(seed);
  return policy.draw(m, rng);
}

namespace {

std::string tagged(const std::string& think, const std::string& answer) {
  return "<think>" + think + "</think><answer>" + answer + "</answer>";
}

std::string grounded(const std::string& think, const std::string& span, const std::string& answer) {
  return "<think>" + think + "</think><glue>" + span + "</glue><answer>" + answer + "</answer>";
}

struct QaCase {
  const char* id;
  const char* reasoning;
  std::vector<std::string> option_texts;
  char correct;
};

ToyPrompt make_qa(const QaCase& c, std::size_t rotation) {
  ToyPrompt prompt;
  prompt.prompt_id = c.id;
  prompt.task = TaskKind::MultiChoiceQA;
  prompt.truth.task = TaskKind::MultiChoiceQA;
  prompt.truth.correct_answer = std::string(1, c.correct);
  prompt.truth.options.clear();
  for (std::size_t i = 0; i < c.option_texts.size(); ++i) {
    prompt.truth.options.push_back({static_cast<char>('A' + i), c.option_texts[i]});
  }
  const std::string right(1, c.correct);
  std::vector<std::string> wrong;
  for (const auto& o : prompt.truth.options) {
    if (o.label != c.correct) wrong.emplace_back(1, o.label);
  }

  std::vector<std::string> texts{
      tagged(c.reasoning, "The answer is (" + right + ")."),
      tagged(c.reasoning, wrong[0]),
      "<answer>" + right + "</answer>",
      tagged(c.reasoning, c.option_texts[static_cast<std::size_t>(wrong[1][0] - 'A')]),
      "<think>" + std::string(c.reasoning) + "</think><answer>" + right,
  };
  std::rotate(texts.begin(), texts.begin() + static_cast<long>(rotation % texts.size()), texts.end());
  prompt.candidate_texts = std::move(texts);
  return prompt;
}

struct GroundingCase {
  const char* id;
  const char* reasoning;
  std::optional<TimeInterval> truth;
  std::vector<std::string> candidates;
};

ToyPrompt make_grounding(const GroundingCase& c) {
  ToyPrompt prompt;
  prompt.prompt_id = c.id;
  prompt.task = TaskKind::TemporalGrounding;
  prompt.truth.task = TaskKind::TemporalGrounding;
  prompt.truth.is_normal = !c.truth.has_value();
  prompt.truth.anomaly_interval = c.truth;
  prompt.candidate_texts = c.candidates;
  return prompt;
}

struct ClassificationCase {
  const char* id;
  const char* reasoning;
  const char* label;
  const char* distractor;
  const char* other;
};

ToyPrompt make_classification(const ClassificationCase& c, std::size_t rotation) {
  ToyPrompt prompt;
  prompt.prompt_id = c.id;
  prompt.task = TaskKind::Classification;
  prompt.truth.task = TaskKind::Classification;
  prompt.truth.correct_answer = c.label;
  std::vector<std::string> texts{
      tagged(c.reasoning, c.label),
      tagged(c.reasoning, c.distractor),
      "<answer>" + std::string(c.label) + "</answer>",
      tagged(c.reasoning, c.other),
  };
  std::rotate(texts.begin(), texts.begin() + static_cast<long>(rotation % texts.size()), texts.end());
  prompt.candidate_texts = std::move(texts);
  return prompt;
}

}  // namespace

std::vector<ToyPrompt> make_benchmark_suite() {
  std::vector<ToyPrompt> suite;

  const std::vector<QaCase> qa{
      {"qa-ladder", "The worker reaches too far and the ladder tips over.",
       {"He is painting the wall", "He loses balance and falls", "He is replacing a bulb",
        "He waves at a neighbour"},
       'B'},
      {"qa-parking", "Two men shove each other and start throwing punches.",
       {"They are greeting", "They are loading a van", "They are fighting", "They are jogging"},
       'C'},
      {"qa-crossing", "The sedan ignores the red light and hits the truck.",
       {"The sedan runs a red light and collides", "The bus stops at the kerb",
        "The cyclist turns left", "Pedestrians cross safely"},
       'A'},
      {"qa-cafe", "A passer-by lifts the bag from the chair and walks off quickly.",
       {"The waiter serves coffee", "The customer pays", "The child drops a toy",
        "The man steals a bag from a chair"},
       'D'},
      {"qa-kitchen", "Smoke pours out of the oven and the alarm starts.",
       {"Someone is baking bread", "The kitchen catches fire", "The lights go off",
        "The dog enters the room"},
       'B'},
  };
  for (std::size_t i = 0; i < qa.size(); ++i) suite.push_back(make_qa(qa[i], i));

  const char* why = "The impact happens between the marked seconds.";
  const std::vector<GroundingCase> tag{
      {"tag-collision", why, TimeInterval{4.0, 10.0},
       {grounded(why, "5, 10", "anomaly"), grounded(why, "2 to 8", "anomaly"),
        grounded(why, "4.0, 10.0", "anomaly"), grounded(why, "0-5", "anomaly"),
        grounded(why, "12, 15", "anomaly"), tagged(why, "normal")}},
      {"tag-brawl", why, TimeInterval{30.0, 45.0},
       {grounded(why, "28, 45", "anomaly"), grounded(why, "35, 50", "anomaly"),
        grounded(why, "0, 20", "anomaly"), grounded(why, "30", "anomaly"),
        grounded(why, "30, 45", "anomaly")}},
      {"tag-fall", why, TimeInterval{0.0, 6.5},
       {grounded(why, "0, 6.5", "anomaly"), grounded(why, "1, 6.5", "anomaly"),
        grounded(why, "3.25, 9.75", "anomaly"), tagged(why, "normal"), "<glue>0, 6.5</glue>"}},
      {"tag-robbery", why, TimeInterval{60.0, 90.0},
       {grounded(why, "70, 100", "anomaly"), grounded(why, "0, 30", "anomaly"),
        grounded(why, "65, 90", "anomaly"), grounded(why, "60, 90", "anomaly"),
        "<think>" + std::string(why) + "</think><glue>60, 90</glue><glue>60, 90</glue><answer>anomaly</answer>"}},
      {"tag-quiet-street", "People walk by and nothing unusual happens.", std::nullopt,
       {grounded(why, "3, 7", "anomaly"), tagged("People walk by and nothing unusual happens.", "normal"),
        grounded(why, "0, 0", "normal"), grounded(why, "10, 20", "anomaly")}},
  };
  for (const auto& c : tag) suite.push_back(make_grounding(c));

  const std::vector<ClassificationCase> cls{
      {"cls-fight", "Two groups exchange blows outside a bar.", "fighting", "robbery", "normal"},
      {"cls-robbery", "A masked man threatens the cashier and takes the cash.", "robbery", "stealing",
       "fighting"},
      {"cls-explosion", "A flash and a shock wave shatter the windows.", "explosion", "fire", "normal"},
      {"cls-stealing", "A woman slips a phone from a stranger's pocket.", "stealing", "robbery",
       "normal"},
      {"cls-normal", "Shoppers queue and pay as usual.", "normal", "shoplifting", "fighting"},
  };
  for (std::size_t i = 0; i < cls.size(); ++i) suite.push_back(make_classification(cls[i], i + 1));

  return suite;
}

std::vector<rewards::RewardVector> score_candidates(const ToyPrompt& prompt,
                                                    const rewards::RewardConfig& reward_config,
                                                    const tags::ParseOptions& parse_options) {
  std::vector<rewards::RewardVector> out;
  out.reserve(prompt.candidate_texts.size());
  for (const auto& text : prompt.candidate_texts) {
    const auto parsed = tags::parse_response(text, prompt.task, parse_options);
    out.push_back(rewards::task_reward(parsed, prompt.truth, reward_config));
  }
  return out;
}

namespace {

std::optional<std::size_t> unique_best(const std::vector<rewards::RewardVector>& scores) {
  std::optional<std::size_t> best;
  bool tied = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!best || scores[i].total > scores[*best].total) {
      best = i;
      tied = false;
    } else if (scores[i].total == scores[*best].total) {
      tied = true;
    }
  }
  return tied ? std::nullopt : best;
}

std::optional<std::size_t> strict_argmax(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != best && values[i] == values[best]) return std::nullopt;
  }
  return best;
}

}  // namespace

ToyTrainingResult train_toy(const grpo::GrpoConfig& config, const std::vector<ToyPrompt>& suite,
                            const rewards::RewardConfig& reward_config,
                            const tags::ParseOptions& parse_options) {
  config.validate();
  if (suite.empty()) throw std::invalid_argument("train_toy: empty suite");

  std::vector<std::vector<rewards::RewardVector>> table;
  std::vector<std::optional<std::size_t>> best;
  std::vector<SoftmaxPolicy> policies;
  for (const auto& prompt : suite) {
    if (prompt.candidate_texts.size() < 2) {
      throw std::invalid_argument("train_toy: prompt '" + prompt.prompt_id + "' needs two candidates");
    }
    table.push_back(score_candidates(prompt, reward_config, parse_options));
    best.push_back(unique_best(table.back()));
    policies.emplace_back(std::vector<double>(prompt.candidate_texts.size(), 0.0));
  }
  const std::vector<SoftmaxPolicy> references = policies;

  std::vector<grpo::PromptSlot> slots;
  for (std::size_t k = 0; k < suite.size(); ++k) {
    slots.push_back({suite[k].prompt_id, &policies[k], &references[k]});
  }

  auto evaluate = [&]() {
    ToyEvaluation eval;
    std::map<TaskKind, std::size_t> task_counts;
    std::size_t n_with_best = 0;
    std::size_t n_correct = 0;
    for (std::size_t k = 0; k < suite.size(); ++k) {
      const auto p = policies[k].probabilities();
      double expected = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) expected += p[i] * table[k][i].total;
      eval.expected_reward += expected;
      eval.expected_reward_by_task[suite[k].task] += expected;
      ++task_counts[suite[k].task];
      eval.kl += grpo::exact_kl(policies[k], references[k]);
      const bool correct = best[k] && strict_argmax(p) == best[k];
      eval.argmax_correct.push_back(correct);
      if (best[k]) {
        ++n_with_best;
        if (correct) ++n_correct;
      }
    }
    const double n = static_cast<double>(suite.size());
    eval.expected_reward /= n;
    eval.kl /= n;
    for (auto& [task, value] : eval.expected_reward_by_task) value /= static_cast<double>(task_counts[task]);
    eval.argmax_correct_fraction =
        n_with_best == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_with_best);
    return eval;
  };

  ToyTrainingResult result;
  result.rows.push_back({0, evaluate(), std::nullopt});

  grpo::Rng rng(config.seed);
  const grpo::RewardFn reward_fn = [&table](std::size_t prompt_index, std::size_t output_id) {
    return table.at(prompt_index).at(output_id);
  };
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    grpo::GrpoStepReport report;
    try {
      report = grpo::train_step(slots, reward_fn, config, rng);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(step, std::move(result.rows), e.what());
    }
    result.rows.push_back({step, evaluate(), std::move(report)});
  }

  for (const auto& policy : policies) result.final_logits.push_back(policy.parameters());
  return result;
}

}  // namespace vaur::policysim
