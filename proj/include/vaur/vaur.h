/* Copyright 2026 The vaur Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the vaur toolkit. Every function is safe to call from C and
 * never lets a C++ exception escape. Functions returning vaur_status leave a
 * message for vaur_last_error() on failure; session commands also record it on
 * the session. Returned strings are owned by the library and stay valid until
 * the owning handle is destroyed or the next call on it.
 */
#ifndef VAUR_VAUR_H
#define VAUR_VAUR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(VAUR_BUILDING_LIBRARY)
#    define VAUR_API __declspec(dllexport)
#  else
#    define VAUR_API __declspec(dllimport)
#  endif
#else
#  define VAUR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 0-2 double as process exit codes. */
typedef enum vaur_status {
  VAUR_OK = 0,
  VAUR_DATA_ERROR = 1,
  VAUR_USAGE_ERROR = 2,
  VAUR_INVALID_ARGUMENT = 3,
  VAUR_INTERNAL_ERROR = 4
} vaur_status;

typedef enum vaur_task {
  VAUR_TASK_QA = 0,
  VAUR_TASK_TAG = 1,
  VAUR_TASK_REASON = 2,
  VAUR_TASK_CLS = 3
} vaur_task;

typedef enum vaur_think {
  VAUR_THINK_BOTH = 0,
  VAUR_THINK_ON = 1,
  VAUR_THINK_OFF = 2
} vaur_think;

typedef struct vaur_session vaur_session;
typedef struct vaur_response vaur_response;
typedef struct vaur_policy vaur_policy;

typedef struct vaur_vau_eval {
  double cls;
  double km;
  double flu;
  double inf;
  double fac;
  double total;
} vaur_vau_eval;

VAUR_API const char* vaur_version(void);
/* Message of the last failed call on this thread; "" when none. */
VAUR_API const char* vaur_last_error(void);
/* 0 warnings only, 1 progress, 2 and above debug (includes judge traffic). */
VAUR_API void vaur_set_log_level(int verbosity);

/* ---- Command sessions ---- */

VAUR_API vaur_status vaur_session_create(vaur_session** out);
VAUR_API void vaur_session_destroy(vaur_session* session);
/* Error of the last command; "" after success. */
VAUR_API const char* vaur_session_error(const vaur_session* session);
/* Human-readable report of the last command. */
VAUR_API const char* vaur_session_summary(const vaur_session* session);

VAUR_API vaur_status vaur_session_set_annotations(vaur_session* session, const char* path);
VAUR_API vaur_status vaur_session_set_predictions(vaur_session* session, const char* path);
VAUR_API vaur_status vaur_session_set_output_dir(vaur_session* session, const char* path, int force);
VAUR_API vaur_status vaur_session_set_taxonomy(vaur_session* session, const char* path);
VAUR_API vaur_status vaur_session_set_judge_scores(vaur_session* session, const char* path);
VAUR_API vaur_status vaur_session_set_task(vaur_session* session, vaur_task task);
VAUR_API vaur_status vaur_session_clear_task(vaur_session* session);
VAUR_API vaur_status vaur_session_set_think(vaur_session* session, vaur_think think);
VAUR_API vaur_status vaur_session_set_seed(vaur_session* session, uint64_t seed);
VAUR_API vaur_status vaur_session_set_beta(vaur_session* session, double beta);
VAUR_API vaur_status vaur_session_set_group_size(vaur_session* session, size_t group_size);
VAUR_API vaur_status vaur_session_set_learning_rate(vaur_session* session, double learning_rate);
VAUR_API vaur_status vaur_session_set_steps(vaur_session* session, size_t steps);
VAUR_API vaur_status vaur_session_set_judge_endpoint(vaur_session* session, const char* url);
VAUR_API vaur_status vaur_session_set_judge_model(vaur_session* session, const char* model);
VAUR_API vaur_status vaur_session_set_judge_stub(vaur_session* session, int enabled);
VAUR_API vaur_status vaur_session_set_judge_retries(vaur_session* session, int max_retries);
VAUR_API vaur_status vaur_session_set_judge_concurrency(vaur_session* session, int max_concurrency);
VAUR_API vaur_status vaur_session_set_judge_timeout_ms(vaur_session* session, int64_t timeout_ms);
VAUR_API vaur_status vaur_session_set_judge_backoff_ms(vaur_session* session, int64_t backoff_ms);

/* Each returns VAUR_OK, VAUR_DATA_ERROR or VAUR_USAGE_ERROR. */
VAUR_API vaur_status vaur_cmd_validate(vaur_session* session);
VAUR_API vaur_status vaur_cmd_score(vaur_session* session);
VAUR_API vaur_status vaur_cmd_train_toy(vaur_session* session);
VAUR_API vaur_status vaur_cmd_judge(vaur_session* session);

/* ---- Response parsing ---- */

VAUR_API vaur_status vaur_response_parse(const char* text, size_t length, vaur_task task, int require_think,
                                         vaur_response** out);
VAUR_API void vaur_response_destroy(vaur_response* response);
/* 1 when the response satisfies the tag grammar. */
VAUR_API int vaur_response_valid(const vaur_response* response);
VAUR_API size_t vaur_response_violation_count(const vaur_response* response);
/* e.g. "MissingTag(glue)"; NULL when index is out of range. */
VAUR_API const char* vaur_response_violation(const vaur_response* response, size_t index);
/* NULL when the segment is absent. */
VAUR_API const char* vaur_response_answer(const vaur_response* response);
VAUR_API const char* vaur_response_think(const vaur_response* response);
/* 1 and the interval when a glue interval was extracted, else 0. */
VAUR_API int vaur_response_glue(const vaur_response* response, double* start, double* end);

/* ---- Numerics ---- */

VAUR_API vaur_status vaur_temporal_iou(double pred_start, double pred_end, double truth_start, double truth_end,
                                       double* out);
/* out_advantages holds count values. */
VAUR_API vaur_status vaur_normalize_rewards(const double* rewards, size_t count, double epsilon,
                                            double* out_advantages);
/* p may be NULL, meaning exp(logprob_policy). */
VAUR_API vaur_status vaur_kl_divergence(const double* logprob_policy, const double* logprob_ref, const double* p,
                                        size_t count, double* out);
VAUR_API vaur_status vaur_aggregate_vau_eval(const vaur_vau_eval* scores, size_t count, vaur_vau_eval* out);

/* ---- Softmax toy policy ---- */

VAUR_API vaur_status vaur_policy_create(const double* logits, size_t count, double temperature, vaur_policy** out);
VAUR_API void vaur_policy_destroy(vaur_policy* policy);
VAUR_API size_t vaur_policy_support_size(const vaur_policy* policy);
/* grad holds support_size values. */
VAUR_API vaur_status vaur_policy_logprob_grad(const vaur_policy* policy, size_t output_id, double* logprob,
                                              double* grad);
/* Draws count ids with replacement; identical seeds give identical draws. */
VAUR_API vaur_status vaur_policy_sample(const vaur_policy* policy, size_t count, uint64_t seed, size_t* out_ids);

#ifdef __cplusplus
}
#endif

#endif /* VAUR_VAUR_H */
