// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Five-dimension reasoning evaluation by an external LLM judge.
//
// The judge is any chat-completion endpoint. A deterministic word-overlap stub
// stands in for offline tests; its numbers are not comparable to a real judge.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metrics.hpp"

namespace vaur::judge {

struct JudgeRequest {
  std::string gt_description;
  std::string gt_analysis;
  std::string model_description;
  std::string model_analysis;

  /// Throws std::invalid_argument when any field is empty.
  void validate() const;
};

struct JudgeConfig {
  /// Full URL, e.g. "https://api.example.com/v1/chat/completions".
  std::string endpoint;
  /// Required unless stub is set.
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  int max_concurrency = 4;
  double temperature = 0.0;
  std::chrono::milliseconds retry_backoff{500};
  /// Environment variable holding the bearer token.
  std::string token_env = "VAUR_JUDGE_TOKEN";
  bool stub = false;
  std::uint64_t stub_seed = 0;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

std::string render_judge_prompt(const JudgeRequest& request);

struct ReplyParse {
  std::optional<metrics::VauEvalScore> score;
  std::string error;

  explicit operator bool() const { return score.has_value(); }
};

/// Reads "CLS: n KM: n FLU: n INF: n FAC: n" in any order and layout. Values
/// outside [0, 10] are failures, never clamped. The total is computed.
ReplyParse parse_judge_reply(std::string_view text);

class JudgeTransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Produces the judge's raw reply for one request. Implementations must be
/// safe to call from several threads at once.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  /// Throws JudgeTransportError when no reply was obtained.
  virtual std::string complete(const JudgeRequest& request, const std::string& prompt) = 0;
};

class HttpJudgeBackend final : public JudgeBackend {
 public:
  explicit HttpJudgeBackend(JudgeConfig config);
  std::string complete(const JudgeRequest& request, const std::string& prompt) override;

 private:
  JudgeConfig config_;
  std::string base_;
  std::string path_;
  std::string token_;
};

class StubJudgeBackend final : public JudgeBackend {
 public:
  explicit StubJudgeBackend(std::uint64_t seed) : seed_(seed) {}
  std::string complete(const JudgeRequest& request, const std::string& prompt) override;

  /// Word-overlap heuristic; identical texts score 10 on every dimension.
  metrics::VauEvalScore score(const JudgeRequest& request) const;

 private:
  std::uint64_t seed_;
};

struct JudgeOutcome {
  std::optional<metrics::VauEvalScore> score;
  std::string error;
  int attempts = 0;
};

/// Scores every request independently with up to config.max_concurrency in
/// flight and 1 + max_retries attempts each. Results align with requests.
/// Invalid requests fail individually without contacting the backend.
std::vector<JudgeOutcome> score_batch(std::span<const JudgeRequest> requests, const JudgeConfig& config,
                                      JudgeBackend& backend);

/// Builds the stub or HTTP backend from the configuration.
std::vector<JudgeOutcome> score_batch(std::span<const JudgeRequest> requests, const JudgeConfig& config);

}  // namespace vaur::judge
