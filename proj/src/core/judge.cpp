// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "judge.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "types.hpp"

namespace vaur::judge {

using nlohmann::json;

void JudgeRequest::validate() const {
  if (trim(gt_description).empty()) throw std::invalid_argument("judge request: empty ground-truth description");
  if (trim(gt_analysis).empty()) throw std::invalid_argument("judge request: empty ground-truth analysis");
  if (trim(model_description).empty()) throw std::invalid_argument("judge request: empty model description");
  if (trim(model_analysis).empty()) throw std::invalid_argument("judge request: empty model analysis");
}

void JudgeConfig::validate() const {
  if (max_retries < 0) throw std::invalid_argument("judge config: max_retries must be >= 0");
  if (max_concurrency < 1) throw std::invalid_argument("judge config: max_concurrency must be >= 1");
  if (timeout.count() <= 0) throw std::invalid_argument("judge config: timeout must be positive");
  if (!stub) {
    if (endpoint.empty()) throw std::invalid_argument("judge config: no endpoint and stub mode is off");
    if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
      throw std::invalid_argument("judge config: endpoint must start with http:// or https://");
    }
    if (model.empty()) throw std::invalid_argument("judge config: model name is empty (set --judge-model)");
  }
}

std::string render_judge_prompt(const JudgeRequest& request) {
  request.validate();
  std::ostringstream out;
  out << "Grade the model's video description and analysis against the reference texts. "
         "Score each aspect:\n"
      << "1. Classification Correctness (10 pts)\n"
      << "2. Key Object and Action Matching (10 pts)\n"
      << "3. Fluency and Coherence (10 pts)\n"
      << "4. Informativeness and Domain Awareness (10 pts)\n"
      << "5. Factual Consistency (10 pts)\n"
      << "\n"
      << "[Ground-truth description]\n" << request.gt_description << "\n\n"
      << "[Ground-truth analysis]\n" << request.gt_analysis << "\n\n"
      << "[Model description]\n" << request.model_description << "\n\n"
      << "[Model analysis]\n" << request.model_analysis << "\n\n"
      << "Reply with one integer score from 0 to 10 for each aspect, exactly in this format:\n"
      << "CLS: <score>\n"
      << "KM: <score>\n"
      << "FLU: <score>\n"
      << "INF: <score>\n"
      << "FAC: <score>\n";
  return out.str();
}

namespace {

constexpr std::array<std::string_view, 5> kLabels{"CLS", "KM", "FLU", "INF", "FAC"};

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
  }
  return true;
}

}  // namespace

ReplyParse parse_judge_reply(std::string_view text) {
  ReplyParse result;
  std::array<std::optional<double>, 5> values;

  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    if (pos > 0 && is_alpha(text[pos - 1])) continue;
    for (std::size_t d = 0; d < kLabels.size(); ++d) {
      const auto label = kLabels[d];
      if (!iequals_at(text, pos, label)) continue;
      std::size_t i = pos + label.size();
      if (i < text.size() && is_alpha(text[i])) continue;
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i >= text.size() || (text[i] != ':' && text[i] != '=')) continue;
      ++i;
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;

      std::size_t end = i;
      if (end < text.size() && (text[end] == '-' || text[end] == '+')) ++end;
      while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) || text[end] == '.')) ++end;
      double value = 0.0;
      const char* first = text.data() + i + (i < text.size() && text[i] == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(first, text.data() + end, value);
      if (end == i || ec != std::errc() || ptr != text.data() + end) {
        result.error = std::string(label) + " has a non-numeric value";
        return result;
      }
      if (!(value >= 0.0 && value <= 10.0)) {
        result.error = std::string(label) + " value " + std::string(text.substr(i, end - i)) + " outside [0, 10]";
        return result;
      }
      if (values[d] && *values[d] != value) {
        result.error = std::string(label) + " appears twice with different values";
        return result;
      }
      values[d] = value;
    }
  }

  for (std::size_t d = 0; d < kLabels.size(); ++d) {
    if (!values[d]) {
      result.error = "missing " + std::string(kLabels[d]);
      return result;
    }
  }
  result.score = metrics::VauEvalScore::from_dimensions(*values[0], *values[1], *values[2], *values[3], *values[4]);
  return result;
}

HttpJudgeBackend::HttpJudgeBackend(JudgeConfig config) : config_(std::move(config)) {
  config_.stub = false;
  config_.validate();
  const auto scheme_end = config_.endpoint.find("://") + 3;
  const auto slash = config_.endpoint.find('/', scheme_end);
  base_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.endpoint.substr(slash);
  if (const char* token = std::getenv(config_.token_env.c_str())) token_ = token;
}

std::string HttpJudgeBackend::complete(const JudgeRequest&, const std::string& prompt) {
  const json body = {
      {"model", config_.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
  };
  const auto payload = body.dump();
  spdlog::debug("judge request POST {}{} auth={} body={}", base_, path_, token_.empty() ? "none" : "Bearer ***",
                payload);

  httplib::Client client(base_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  auto res = client.Post(path_, headers, payload, "application/json");
  if (!res) throw JudgeTransportError("judge endpoint unreachable: " + httplib::to_string(res.error()));
  spdlog::debug("judge response status={} body={}", res->status, res->body);
  if (res->status != 200) throw JudgeTransportError("judge endpoint returned HTTP " + std::to_string(res->status));

  try {
    const auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw JudgeTransportError(std::string("judge endpoint returned an unexpected body: ") + e.what());
  }
}

namespace {

std::set<std::string> word_set(std::string_view text) {
  std::set<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      words.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.insert(std::move(current));
  return words;
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& w : a) n += b.count(w);
  return n;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  const auto inter = intersection_size(a, b);
  const auto uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

metrics::VauEvalScore StubJudgeBackend::score(const JudgeRequest& request) const {
  const auto gt_desc = word_set(request.gt_description);
  const auto gt_an = word_set(request.gt_analysis);
  const auto model_desc = word_set(request.model_description);
  const auto model_an = word_set(request.model_analysis);
  auto gt_all = gt_desc;
  gt_all.insert(gt_an.begin(), gt_an.end());
  auto model_all = model_desc;
  model_all.insert(model_an.begin(), model_an.end());
  const auto shared = intersection_size(gt_all, model_all);

  const std::array<double, 5> overlap{
      jaccard(gt_an, model_an),
      jaccard(gt_desc, model_desc),
      ratio(std::min(gt_all.size(), model_all.size()), std::max(gt_all.size(), model_all.size())),
      ratio(shared, gt_all.size()),
      ratio(shared, model_all.size()),
  };

  std::uint64_t h = fnv1a(request.gt_description);
  h = fnv1a(request.gt_analysis, h);
  h = fnv1a(request.model_description, h);
  h = fnv1a(request.model_analysis, h);
  std::array<double, 5> dims{};
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const auto r = splitmix64(h ^ splitmix64(seed_ + d));
    const double jitter = (static_cast<double>(r >> 11) * 0x1.0p-53 - 0.5) * (1.0 - overlap[d]);
    dims[d] = std::clamp(std::round(10.0 * overlap[d] + jitter), 0.0, 10.0);
  }
  return metrics::VauEvalScore::from_dimensions(dims[0], dims[1], dims[2], dims[3], dims[4]);
}

std::string StubJudgeBackend::complete(const JudgeRequest& request, const std::string&) {
  const auto s = score(request);
  std::ostringstream out;
  out << "CLS: " << s.cls << "\nKM: " << s.km << "\nFLU: " << s.flu << "\nINF: " << s.inf << "\nFAC: " << s.fac
      << "\n";
  return out.str();
}

std::vector<JudgeOutcome> score_batch(std::span<const JudgeRequest> requests, const JudgeConfig& config,
                                      JudgeBackend& backend) {
  config.validate();
  std::vector<JudgeOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      JudgeOutcome& out = outcomes[i];
      std::string prompt;
      try {
        prompt = render_judge_prompt(requests[i]);
      } catch (const std::exception& e) {
        out.error = e.what();
        continue;
      }
      for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        ++out.attempts;
        try {
          const auto reply = backend.complete(requests[i], prompt);
          auto parsed = parse_judge_reply(reply);
          if (parsed) {
            out.score = parsed.score;
            out.error.clear();
            break;
          }
          out.error = "unparseable judge reply: " + parsed.error;
        } catch (const std::exception& e) {
          out.error = e.what();
        }
        spdlog::info("judge item {} attempt {} failed: {}", i, out.attempts, out.error);
        if (attempt < config.max_retries && config.retry_backoff.count() > 0) {
          std::this_thread::sleep_for(config.retry_backoff * (attempt + 1));
        }
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.max_concurrency), requests.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outcomes;
}

std::vector<JudgeOutcome> score_batch(std::span<const JudgeRequest> requests, const JudgeConfig& config) {
  config.validate();
  if (config.stub) {
    StubJudgeBackend backend(config.stub_seed);
    return score_batch(requests, config, backend);
  }
  HttpJudgeBackend backend(config);
  return score_batch(requests, config, backend);
}

}  // namespace vaur::judge
