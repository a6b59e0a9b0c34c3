// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations the tests compare the library against. They are
// written independently of src/ and favour obviousness over speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "grpo.hpp"
#include "policysim.hpp"
#include "types.hpp"

namespace oracle {

// ---------------------------------------------------------------- grammar

struct NaiveVerdict {
  bool valid = false;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  std::optional<std::pair<double, double>> glue;
};

inline std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + needle.size())) ++n;
  return n;
}

/// Two non-negative numbers separated by a comma, "to", a hyphen, or
/// whitespace alone. Returns them ordered.
inline std::optional<std::pair<double, double>> naive_interval(const std::string& text) {
  static const std::regex re(
      R"(^\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?:\s*(?:,|[tT][oO]|-)\s*|\s+)((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) return std::nullopt;
  double a = std::stod(m[1].str());
  double b = std::stod(m[2].str());
  if (a > b) std::swap(a, b);
  return std::make_pair(a, b);
}

/// Grammar check by counting and finding: each participating tag appears at
/// most once as a pair (exactly once when required), pairs open before they
/// close and do not overlap, think precedes answer, the answer is not blank,
/// and for grounding the glue content is an interval.
inline NaiveVerdict naive_scan(const std::string& raw, vaur::TaskKind task, bool require_think) {
  const bool grounding = task == vaur::TaskKind::TemporalGrounding;
  struct Span {
    std::size_t begin, end;
    std::string content;
  };
  NaiveVerdict out;
  bool ok = true;
  std::vector<Span> spans;
  std::optional<Span> think, answer, glue;

  auto scan = [&](const std::string& name, bool required, std::optional<Span>& slot) {
    const std::string open = "<" + name + ">";
    const std::string close = "</" + name + ">";
    const auto n_open = count_of(raw, open);
    const auto n_close = count_of(raw, close);
    if (n_open == 0 && n_close == 0) {
      if (required) ok = false;
      return;
    }
    if (n_open != 1 || n_close != 1) {
      ok = false;
      return;
    }
    const auto o = raw.find(open);
    const auto c = raw.find(close);
    if (c < o + open.size()) {
      ok = false;
      return;
    }
    slot = Span{o, c + close.size(), raw.substr(o + open.size(), c - o - open.size())};
    spans.push_back(*slot);
  };
  scan("think", require_think, think);
  scan("answer", true, answer);
  if (grounding) {
    scan("glue", true, glue);
  } else {
    // Outside grounding, glue is read but never judged.
    const auto o = raw.find("<glue>");
    const auto c = raw.find("</glue>");
    if (count_of(raw, "<glue>") == 1 && count_of(raw, "</glue>") == 1 && c >= o + 6) {
      glue = Span{o, c + 7, raw.substr(o + 6, c - o - 6)};
    }
  }

  for (std::size_t a = 0; a < spans.size(); ++a) {
    for (std::size_t b = a + 1; b < spans.size(); ++b) {
      if (spans[a].begin < spans[b].end && spans[b].begin < spans[a].end) ok = false;
    }
  }
  if (think && answer && think->begin > answer->begin) ok = false;
  if (answer) {
    const auto& s = answer->content;
    if (std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); })) ok = false;
  }
  std::optional<std::pair<double, double>> interval;
  if (glue) interval = naive_interval(glue->content);
  if (grounding && glue && !interval) ok = false;

  out.valid = ok;
  if (think) out.think = think->content;
  if (answer) out.answer = answer->content;
  out.glue = interval;
  return out;
}

/// Random strings built from tag fragments, text and intervals, sometimes
/// truncated mid-token.
inline std::string fuzz_response(std::mt19937_64& rng) {
  static const std::vector<std::string> fragments{
      "<think>", "</think>", "<answer>", "</answer>", "<glue>", "</glue>", "<think>", "</think>", "<answer>",
      "</answer>", "<glue>", "</glue>", "the man falls", "B", " ", "\n", "normal", "fighting", "3.0, 9.5",
      "9.5 to 3", "4 - 10", "2 8", "-2, 4", "7", "1, 2, 3", "x", "<thi", "</ans", "<glue", "<>", "</>",
      "<THINK>", "(C)", "0.5e1,6"};
  std::uniform_int_distribution<std::size_t> pick(0, fragments.size() - 1);
  std::uniform_int_distribution<int> len(0, 10);
  std::string s;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) s += fragments[pick(rng)];
  // Some inputs follow the intended template so valid cases are common.
  if (rng() % 3 == 0) {
    s = std::string(rng() % 2 ? "<think>" + fragments[pick(rng)] + "</think>" : "") +
        (rng() % 2 ? "<glue>" + fragments[pick(rng)] + "</glue>" : "") + "<answer>" + fragments[pick(rng)] +
        "</answer>" + (rng() % 4 == 0 ? fragments[pick(rng)] : "");
  }
  if (!s.empty() && rng() % 5 == 0) s.resize(rng() % s.size());
  return s;
}

// ---------------------------------------------------------------- IoU

/// IoU of intervals given in whole milliseconds, by counting 1 ms cells.
/// Zero-length intervals cover no cells; identical points score 1.
inline double iou_ms_grid(std::int64_t ps, std::int64_t pe, std::int64_t ts, std::int64_t te) {
  if (ps == pe && ts == te) return ps == ts ? 1.0 : 0.0;
  std::int64_t inter = 0, uni = 0;
  const auto lo = std::min(ps, ts), hi = std::max(pe, te);
  for (std::int64_t k = lo; k < hi; ++k) {
    const bool in_p = k >= ps && k < pe;
    const bool in_t = k >= ts && k < te;
    inter += in_p && in_t;
    uni += in_p || in_t;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------- statistics

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------- gradients

/// Objective of a fixed group as a function of the policy logits.
inline double objective_at(const vaur::grpo::CandidateGroup& group, const vaur::grpo::AdvantageSet& adv,
                           vaur::policysim::SoftmaxPolicy policy, const vaur::policysim::SoftmaxPolicy& reference,
                           const vaur::grpo::GrpoConfig& cfg, const std::vector<double>& theta) {
  policy.set_parameters(theta);
  std::vector<double> lp;
  for (const auto& c : group.candidates) lp.push_back(policy.log_prob(c.output_id));
  const double kl = vaur::grpo::exact_kl(policy, reference);
  return vaur::grpo::grpo_objective(group, adv, lp, kl, cfg).objective_value;
}

/// Central differences with step h.
inline std::vector<double> fd_gradient(const vaur::grpo::CandidateGroup& group, const vaur::grpo::AdvantageSet& adv,
                                       const vaur::policysim::SoftmaxPolicy& policy,
                                       const vaur::policysim::SoftmaxPolicy& reference,
                                       const vaur::grpo::GrpoConfig& cfg, double h) {
  const auto theta = policy.parameters();
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    g[i] = (objective_at(group, adv, policy, reference, cfg, up) -
            objective_at(group, adv, policy, reference, cfg, down)) /
           (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, 1e-4). Central differences with h = 1e-6
/// carry ~1e-10 of round-off on O(1) objectives, so gradients with norm below
/// 1e-4 cannot be resolved to 1e-5 relative; the floor makes those cases an
/// absolute comparison at 1e-9.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-4});
}

/// A random toy instance: N logits, a reference, M sampled candidates with
/// random rewards and old log-probabilities taken from the current policy.
struct GradientInstance {
  vaur::policysim::SoftmaxPolicy policy{{0.0, 0.0}};
  vaur::policysim::SoftmaxPolicy reference{{0.0, 0.0}};
  vaur::grpo::CandidateGroup group;
  vaur::grpo::AdvantageSet advantages;
  vaur::grpo::GrpoConfig config;
};

inline GradientInstance random_gradient_instance(std::mt19937_64& rng, std::size_t n, std::size_t m, double beta) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> reward(0.0, 3.0);
  std::vector<double> logits(n), ref_logits(n);
  for (auto& v : logits) v = normal(rng);
  for (auto& v : ref_logits) v = normal(rng);
  GradientInstance inst;
  inst.policy = vaur::policysim::SoftmaxPolicy(logits);
  inst.reference = vaur::policysim::SoftmaxPolicy(ref_logits);
  inst.config.beta = beta;
  inst.config.group_size = m;
  inst.group.prompt_id = "fd";
  vaur::grpo::Rng draw_rng(rng());
  std::vector<double> rewards;
  for (const auto& d : inst.policy.draw(m, draw_rng)) {
    const double r = reward(rng);
    rewards.push_back(r);
    inst.group.candidates.push_back({d.output_id, r, d.logprob, inst.reference.log_prob(d.output_id)});
  }
  inst.advantages = vaur::grpo::normalize_rewards(rewards, inst.config.std_epsilon);
  return inst;
}

}  // namespace oracle
