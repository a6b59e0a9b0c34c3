// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "vaur/vaur.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "grpo.hpp"
#include "metrics.hpp"
#include "policysim.hpp"
#include "rewards.hpp"
#include "tagparse.hpp"

struct vaur_session {
  vaur::cli::RunConfig config;
  std::string summary;
  std::string error;
};

struct vaur_response {
  vaur::tags::ParseResult result;
  std::vector<std::string> violations;
};

struct vaur_policy {
  vaur::policysim::SoftmaxPolicy policy;
};

namespace {

thread_local std::string g_last_error;

vaur_status fail(vaur_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

/// Runs body, mapping exceptions to status codes. Clears the error on success.
template <typename Fn>
vaur_status guarded(Fn&& body) noexcept {
  try {
    const vaur_status s = body();
    if (s == VAUR_OK) g_last_error.clear();
    return s;
  } catch (const std::invalid_argument& e) {
    return fail(VAUR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(VAUR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VAUR_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(VAUR_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(VAUR_INTERNAL_ERROR, "unknown error");
  }
}

std::optional<vaur::TaskKind> to_task(vaur_task task) {
  switch (task) {
    case VAUR_TASK_QA: return vaur::TaskKind::MultiChoiceQA;
    case VAUR_TASK_TAG: return vaur::TaskKind::TemporalGrounding;
    case VAUR_TASK_REASON: return vaur::TaskKind::Reasoning;
    case VAUR_TASK_CLS: return vaur::TaskKind::Classification;
  }
  return std::nullopt;
}

template <typename Fn>
vaur_status with_session(vaur_session* s, Fn&& body) noexcept {
  if (!s) return fail(VAUR_INVALID_ARGUMENT, "null session");
  return guarded([&] {
    body(s->config);
    return VAUR_OK;
  });
}

vaur_status set_path(vaur_session* s, const char* path, std::filesystem::path vaur::cli::RunConfig::*field) {
  if (!path) return fail(VAUR_INVALID_ARGUMENT, "null path");
  return with_session(s, [&](auto& c) { c.*field = path; });
}

template <typename Fn>
vaur_status run_command(vaur_session* s, Fn&& command) noexcept {
  if (!s) return fail(VAUR_INVALID_ARGUMENT, "null session");
  return guarded([&] {
    const auto result = command(s->config);
    s->summary = result.summary;
    s->error = result.error;
    if (!result.error.empty()) g_last_error = result.error;
    return static_cast<vaur_status>(static_cast<int>(result.code));
  });
}

vaur::metrics::VauEvalScore from_c(const vaur_vau_eval& s) {
  return vaur::metrics::VauEvalScore::from_dimensions(s.cls, s.km, s.flu, s.inf, s.fac);
}

}  // namespace

extern "C" {

const char* vaur_version(void) { return "0.1.0"; }

const char* vaur_last_error(void) { return g_last_error.c_str(); }

void vaur_set_log_level(int verbosity) {
  spdlog::set_level(verbosity <= 0 ? spdlog::level::warn
                    : verbosity == 1 ? spdlog::level::info
                                     : spdlog::level::debug);
}

vaur_status vaur_session_create(vaur_session** out) {
  if (!out) return fail(VAUR_INVALID_ARGUMENT, "null output pointer");
  return guarded([&] {
    *out = new vaur_session();
    return VAUR_OK;
  });
}

void vaur_session_destroy(vaur_session* session) { delete session; }

const char* vaur_session_error(const vaur_session* session) { return session ? session->error.c_str() : ""; }

const char* vaur_session_summary(const vaur_session* session) { return session ? session->summary.c_str() : ""; }

vaur_status vaur_session_set_annotations(vaur_session* s, const char* path) {
  return set_path(s, path, &vaur::cli::RunConfig::annotations);
}

vaur_status vaur_session_set_predictions(vaur_session* s, const char* path) {
  return set_path(s, path, &vaur::cli::RunConfig::predictions);
}

vaur_status vaur_session_set_output_dir(vaur_session* s, const char* path, int force) {
  if (!path) return fail(VAUR_INVALID_ARGUMENT, "null path");
  return with_session(s, [&](auto& c) {
    c.output_dir = path;
    c.force = force != 0;
  });
}

vaur_status vaur_session_set_taxonomy(vaur_session* s, const char* path) {
  return set_path(s, path, &vaur::cli::RunConfig::taxonomy);
}

vaur_status vaur_session_set_judge_scores(vaur_session* s, const char* path) {
  return set_path(s, path, &vaur::cli::RunConfig::judge_scores);
}

vaur_status vaur_session_set_task(vaur_session* s, vaur_task task) {
  const auto t = to_task(task);
  if (!t) return fail(VAUR_INVALID_ARGUMENT, "unknown task");
  return with_session(s, [&](auto& c) { c.task = t; });
}

vaur_status vaur_session_clear_task(vaur_session* s) {
  return with_session(s, [](auto& c) { c.task.reset(); });
}

vaur_status vaur_session_set_think(vaur_session* s, vaur_think think) {
  vaur::cli::ThinkFilter f;
  switch (think) {
    case VAUR_THINK_BOTH: f = vaur::cli::ThinkFilter::Both; break;
    case VAUR_THINK_ON: f = vaur::cli::ThinkFilter::On; break;
    case VAUR_THINK_OFF: f = vaur::cli::ThinkFilter::Off; break;
    default: return fail(VAUR_INVALID_ARGUMENT, "unknown think filter");
  }
  return with_session(s, [&](auto& c) { c.think = f; });
}

vaur_status vaur_session_set_seed(vaur_session* s, uint64_t seed) {
  return with_session(s, [&](auto& c) { c.seed = seed; });
}

vaur_status vaur_session_set_beta(vaur_session* s, double beta) {
  return with_session(s, [&](auto& c) { c.beta = beta; });
}

vaur_status vaur_session_set_group_size(vaur_session* s, size_t group_size) {
  return with_session(s, [&](auto& c) { c.group_size = group_size; });
}

vaur_status vaur_session_set_learning_rate(vaur_session* s, double learning_rate) {
  return with_session(s, [&](auto& c) { c.learning_rate = learning_rate; });
}

vaur_status vaur_session_set_steps(vaur_session* s, size_t steps) {
  return with_session(s, [&](auto& c) { c.steps = steps; });
}

vaur_status vaur_session_set_judge_endpoint(vaur_session* s, const char* url) {
  if (!url) return fail(VAUR_INVALID_ARGUMENT, "null url");
  return with_session(s, [&](auto& c) { c.judge.endpoint = url; });
}

vaur_status vaur_session_set_judge_model(vaur_session* s, const char* model) {
  if (!model) return fail(VAUR_INVALID_ARGUMENT, "null model");
  return with_session(s, [&](auto& c) { c.judge.model = model; });
}

vaur_status vaur_session_set_judge_stub(vaur_session* s, int enabled) {
  return with_session(s, [&](auto& c) { c.judge.stub = enabled != 0; });
}

vaur_status vaur_session_set_judge_retries(vaur_session* s, int max_retries) {
  return with_session(s, [&](auto& c) { c.judge.max_retries = max_retries; });
}

vaur_status vaur_session_set_judge_concurrency(vaur_session* s, int max_concurrency) {
  return with_session(s, [&](auto& c) { c.judge.max_concurrency = max_concurrency; });
}

vaur_status vaur_session_set_judge_timeout_ms(vaur_session* s, int64_t timeout_ms) {
  return with_session(s, [&](auto& c) { c.judge.timeout = std::chrono::milliseconds(timeout_ms); });
}

vaur_status vaur_session_set_judge_backoff_ms(vaur_session* s, int64_t backoff_ms) {
  return with_session(s, [&](auto& c) { c.judge.retry_backoff = std::chrono::milliseconds(backoff_ms); });
}

vaur_status vaur_cmd_validate(vaur_session* s) { return run_command(s, vaur::cli::cmd_validate); }
vaur_status vaur_cmd_score(vaur_session* s) { return run_command(s, vaur::cli::cmd_score); }
vaur_status vaur_cmd_train_toy(vaur_session* s) { return run_command(s, vaur::cli::cmd_train_toy); }
vaur_status vaur_cmd_judge(vaur_session* s) { return run_command(s, vaur::cli::cmd_judge); }

vaur_status vaur_response_parse(const char* text, size_t length, vaur_task task, int require_think,
                                vaur_response** out) {
  if (!out || (!text && length > 0)) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  const auto t = to_task(task);
  if (!t) return fail(VAUR_INVALID_ARGUMENT, "unknown task");
  return guarded([&] {
    auto r = std::make_unique<vaur_response>();
    r->result = vaur::tags::parse_response(std::string_view(text ? text : "", length), *t,
                                           {.require_think = require_think != 0});
    for (const auto& v : r->result.verdict.violations) r->violations.push_back(vaur::tags::describe(v));
    *out = r.release();
    return VAUR_OK;
  });
}

void vaur_response_destroy(vaur_response* response) { delete response; }

int vaur_response_valid(const vaur_response* r) { return r && r->result.verdict.valid ? 1 : 0; }

size_t vaur_response_violation_count(const vaur_response* r) { return r ? r->violations.size() : 0; }

const char* vaur_response_violation(const vaur_response* r, size_t index) {
  if (!r || index >= r->violations.size()) return nullptr;
  return r->violations[index].c_str();
}

const char* vaur_response_answer(const vaur_response* r) {
  if (!r || !r->result.response) return nullptr;
  return r->result.response->answer.c_str();
}

const char* vaur_response_think(const vaur_response* r) {
  if (!r || !r->result.response || !r->result.response->think) return nullptr;
  return r->result.response->think->c_str();
}

int vaur_response_glue(const vaur_response* r, double* start, double* end) {
  if (!r || !r->result.response || !r->result.response->glue) return 0;
  if (start) *start = r->result.response->glue->start;
  if (end) *end = r->result.response->glue->end;
  return 1;
}

vaur_status vaur_temporal_iou(double pred_start, double pred_end, double truth_start, double truth_end,
                              double* out) {
  if (!out) return fail(VAUR_INVALID_ARGUMENT, "null output pointer");
  const vaur::TimeInterval pred{pred_start, pred_end};
  const vaur::TimeInterval truth{truth_start, truth_end};
  if (!pred.valid() || !truth.valid()) return fail(VAUR_INVALID_ARGUMENT, "intervals need 0 <= start <= end");
  return guarded([&] {
    *out = vaur::rewards::temporal_iou(pred, truth);
    return VAUR_OK;
  });
}

vaur_status vaur_normalize_rewards(const double* rewards, size_t count, double epsilon, double* out_advantages) {
  if (!rewards || !out_advantages) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto adv = vaur::grpo::normalize_rewards(std::span(rewards, count), epsilon);
    std::copy(adv.values.begin(), adv.values.end(), out_advantages);
    return VAUR_OK;
  });
}

vaur_status vaur_kl_divergence(const double* logprob_policy, const double* logprob_ref, const double* p,
                               size_t count, double* out) {
  if (!logprob_policy || !logprob_ref || !out) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<double> probs;
    if (p) {
      probs.assign(p, p + count);
    } else {
      for (size_t i = 0; i < count; ++i) probs.push_back(std::exp(logprob_policy[i]));
    }
    *out = vaur::grpo::kl_divergence(std::span(logprob_policy, count), std::span(logprob_ref, count), probs);
    return VAUR_OK;
  });
}

vaur_status vaur_aggregate_vau_eval(const vaur_vau_eval* scores, size_t count, vaur_vau_eval* out) {
  if (!scores || !out) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<vaur::metrics::VauEvalScore> in;
    for (size_t i = 0; i < count; ++i) in.push_back(from_c(scores[i]));
    const auto agg = vaur::metrics::aggregate_vau_eval(in);
    *out = {agg.cls, agg.km, agg.flu, agg.inf, agg.fac, agg.total};
    return VAUR_OK;
  });
}

vaur_status vaur_policy_create(const double* logits, size_t count, double temperature, vaur_policy** out) {
  if (!logits || !out) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new vaur_policy{vaur::policysim::SoftmaxPolicy(std::vector<double>(logits, logits + count), temperature)};
    return VAUR_OK;
  });
}

void vaur_policy_destroy(vaur_policy* policy) { delete policy; }

size_t vaur_policy_support_size(const vaur_policy* policy) { return policy ? policy->policy.support_size() : 0; }

vaur_status vaur_policy_logprob_grad(const vaur_policy* policy, size_t output_id, double* logprob, double* grad) {
  if (!policy) return fail(VAUR_INVALID_ARGUMENT, "null policy");
  return guarded([&] {
    const auto lg = vaur::policysim::logprob_and_grad(policy->policy, output_id);
    if (logprob) *logprob = lg.logprob;
    if (grad) std::copy(lg.grad.begin(), lg.grad.end(), grad);
    return VAUR_OK;
  });
}

vaur_status vaur_policy_sample(const vaur_policy* policy, size_t count, uint64_t seed, size_t* out_ids) {
  if (!policy || (!out_ids && count > 0)) return fail(VAUR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    vaur::grpo::Rng rng(seed);
    const auto draws = policy->policy.draw(count, rng);
    for (size_t i = 0; i < draws.size(); ++i) out_ids[i] = draws[i].output_id;
    return VAUR_OK;
  });
}

}  // extern "C"
