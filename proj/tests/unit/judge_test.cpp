// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "judge.hpp"
#include "json.hpp"

using namespace vaur;
using namespace vaur::judge;

namespace {

const std::filesystem::path kData = VAUR_TEST_DATA;

JudgeRequest golden_request() {
  return {"A man in a red jacket pushes another man to the ground near the bus stop.",
          "Specific anomaly type: fighting\nLocation: a bus stop at night\nKey evidence: the push and the fall",
          "Two men argue at a bus stop and one knocks the other down.",
          "The video shows fighting because one man attacks the other."};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Replies with a fixed text, or throws for requests whose model analysis
/// contains "fail". Counts calls.
class ScriptedBackend final : public JudgeBackend {
 public:
  explicit ScriptedBackend(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const JudgeRequest& request, const std::string&) override {
    ++calls;
    if (request.model_analysis.find("fail") != std::string::npos) throw JudgeTransportError("scripted failure");
    return reply_ + " " + request.model_analysis;
  }
  std::atomic<int> calls{0};

 private:
  std::string reply_;
};

/// Local chat-completion server on an ephemeral port.
class FakeJudgeServer {
 public:
  FakeJudgeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_auth = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      last_model = body.at("model").get<std::string>();
      last_prompt = body.at("messages").at(0).at("content").get<std::string>();
      if (fail_first > 0) {
        --fail_first;
        res.status = 503;
        return;
      }
      const nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", "CLS: 6\nKM: 5\nFLU: 9\nINF: 7\nFAC: 6"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeJudgeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  std::string last_auth;
  std::string last_model;
  std::string last_prompt;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// A loopback port that was free a moment ago; connections to it are refused.
int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  socklen_t len = sizeof addr;
  REQUIRE(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("prompt matches the golden file") {
  const auto prompt = render_judge_prompt(golden_request());
  CHECK(prompt == read_file(kData / "judge_prompt.golden.txt"));
}

TEST_CASE("prompt lists the five rubric lines in order") {
  const auto prompt = render_judge_prompt(golden_request());
  std::size_t at = 0;
  for (const char* line : {"Classification Correctness (10 pts)", "Key Object and Action Matching (10 pts)",
                           "Fluency and Coherence (10 pts)", "Informativeness and Domain Awareness (10 pts)",
                           "Factual Consistency (10 pts)"}) {
    const auto p = prompt.find(line, at);
    CAPTURE(line);
    REQUIRE(p != std::string::npos);
    at = p;
  }
  for (const char* field : {"near the bus stop", "a bus stop at night", "knocks the other down", "one man attacks"}) {
    CHECK(prompt.find(field) != std::string::npos);
  }
}

TEST_CASE("requests need every field") {
  auto r = golden_request();
  r.model_description = "   ";
  CHECK_THROWS_AS(render_judge_prompt(r), std::invalid_argument);
  r = golden_request();
  r.gt_analysis.clear();
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("reply parsing") {
  const auto ok = parse_judge_reply("CLS: 6 KM: 5 FLU: 9 INF: 7 FAC: 6");
  REQUIRE(ok);
  CHECK(*ok.score == metrics::VauEvalScore::from_dimensions(6, 5, 9, 7, 6));
  CHECK(ok.score->total == 33.0);

  const auto reordered = parse_judge_reply("Scores:\nfac = 6\nINF: 7\nflu: 9, km: 5; cls: 6.5");
  REQUIRE(reordered);
  CHECK(reordered.score->cls == 6.5);

  CHECK_FALSE(parse_judge_reply("CLS: 11 KM: 5 FLU: 9 INF: 7 FAC: 6"));
  CHECK_FALSE(parse_judge_reply("CLS: -1 KM: 5 FLU: 9 INF: 7 FAC: 6"));
  const auto missing = parse_judge_reply("CLS: 6 KM: 5 FLU: 9 INF: 7");
  CHECK_FALSE(missing);
  CHECK(missing.error.find("FAC") != std::string::npos);
  CHECK_FALSE(parse_judge_reply("CLS: six KM: 5 FLU: 9 INF: 7 FAC: 6"));
  CHECK_FALSE(parse_judge_reply("CLS: 6 KM: 5 FLU: 9 INF: 7 FAC: 6 CLS: 7"));
  CHECK(parse_judge_reply("CLS: 6 KM: 5 FLU: 9 INF: 7 FAC: 6 CLS: 6"));
  CHECK_FALSE(parse_judge_reply(""));
  // Labels must stand alone.
  CHECK_FALSE(parse_judge_reply("XCLS: 6 KM: 5 FLU: 9 INF: 7 FAC: 6"));
}

TEST_CASE("stub judge") {
  StubJudgeBackend stub(7);
  const JudgeRequest same{"a man falls off a ladder", "fall from height", "a man falls off a ladder",
                          "fall from height"};
  CHECK(stub.score(same) == metrics::VauEvalScore::from_dimensions(10, 10, 10, 10, 10));

  const auto req = golden_request();
  const auto a = stub.score(req);
  CHECK(a.in_range());
  CHECK(a == StubJudgeBackend(7).score(req));
  CHECK(parse_judge_reply(stub.complete(req, render_judge_prompt(req))).score == a);

  JudgeConfig cfg;
  cfg.stub = true;
  cfg.stub_seed = 7;
  const std::vector<JudgeRequest> batch{same, req, req};
  const auto out1 = score_batch(batch, cfg);
  const auto out2 = score_batch(batch, cfg);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    REQUIRE(out1[i].score);
    CHECK(out1[i].score == out2[i].score);
  }
  CHECK(out1[0].score->total == 50.0);
}

TEST_CASE("config validation") {
  JudgeConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no endpoint
  cfg.endpoint = "ftp://x";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.endpoint = "http://localhost:8000/v1/chat/completions";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // no model
  cfg.model = "judge-model";
  CHECK_NOTHROW(cfg.validate());
  cfg.max_concurrency = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.stub = true;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("batch results align with requests and failures stay isolated") {
  ScriptedBackend backend("CLS: 6 KM: 5 FLU: 9 INF: 7 FAC: 6");
  JudgeConfig cfg;
  cfg.stub = true;
  cfg.max_retries = 1;
  cfg.max_concurrency = 4;
  cfg.retry_backoff = std::chrono::milliseconds(0);
  std::vector<JudgeRequest> reqs;
  for (int i = 0; i < 10; ++i) {
    auto r = golden_request();
    r.model_analysis = (i == 3 || i == 7) ? "fail " + std::to_string(i) : "ok " + std::to_string(i);
    reqs.push_back(r);
  }
  reqs.push_back(golden_request());
  reqs.back().gt_description = "";
  const auto out = score_batch(reqs, cfg, backend);
  REQUIRE(out.size() == 11);
  for (std::size_t i = 0; i < 10; ++i) {
    CAPTURE(i);
    if (i == 3 || i == 7) {
      CHECK_FALSE(out[i].score);
      CHECK(out[i].attempts == 2);
      CHECK(out[i].error.find("scripted failure") != std::string::npos);
    } else {
      REQUIRE(out[i].score);
      CHECK(out[i].score->total == 33.0);
      CHECK(out[i].attempts == 1);
    }
  }
  CHECK_FALSE(out[10].score);
  CHECK(out[10].attempts == 0);
  CHECK(backend.calls == 12);
}

TEST_CASE("unparseable replies are retried") {
  ScriptedBackend backend("I cannot score this.");
  JudgeConfig cfg;
  cfg.stub = true;
  cfg.max_retries = 2;
  cfg.retry_backoff = std::chrono::milliseconds(0);
  const std::vector<JudgeRequest> reqs{golden_request()};
  const auto out = score_batch(reqs, cfg, backend);
  CHECK_FALSE(out[0].score);
  CHECK(out[0].attempts == 3);
}

TEST_CASE("HTTP backend against a local server") {
  FakeJudgeServer server;
  ::setenv("VAUR_JUDGE_TEST_TOKEN", "secret-token", 1);
  JudgeConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "judge-model";
  cfg.token_env = "VAUR_JUDGE_TEST_TOKEN";
  cfg.max_retries = 2;
  cfg.retry_backoff = std::chrono::milliseconds(0);
  cfg.timeout = std::chrono::milliseconds(5000);

  const std::vector<JudgeRequest> reqs{golden_request(), golden_request()};
  const auto out = score_batch(reqs, cfg);
  for (const auto& o : out) {
    REQUIRE(o.score);
    CHECK(o.score->total == 33.0);
  }
  CHECK(server.last_auth == "Bearer secret-token");
  CHECK(server.last_model == "judge-model");
  CHECK(server.last_prompt == render_judge_prompt(golden_request()));

  server.fail_first = 2;
  const std::vector<JudgeRequest> one{golden_request()};
  const auto retried = score_batch(one, cfg);
  REQUIRE(retried[0].score);
  CHECK(retried[0].attempts == 3);
}

TEST_CASE("endpoint down: every attempt is made and fails") {
  const int port = unused_port();
  JudgeConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "judge-model";
  cfg.max_retries = 2;
  cfg.max_concurrency = 2;
  cfg.retry_backoff = std::chrono::milliseconds(0);
  cfg.timeout = std::chrono::milliseconds(2000);
  const std::vector<JudgeRequest> reqs(3, golden_request());
  const auto out = score_batch(reqs, cfg);
  int attempts = 0;
  for (const auto& o : out) {
    CHECK_FALSE(o.score);
    CHECK_FALSE(o.error.empty());
    attempts += o.attempts;
  }
  CHECK(attempts == 9);
}
