// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// vaur: validate benchmark annotations, score prediction files, run the toy
// GRPO demo and collect judge scores. Exit codes: 0 success, 1 data-level
// failure, 2 usage or configuration error.

#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vaur/vaur.h"

namespace {

struct Options {
  std::string annotations;
  std::string predictions;
  std::string out = ".";
  std::string task;
  std::string think = "both";
  std::uint64_t seed = 0;
  std::optional<double> beta;
  std::optional<std::size_t> group_size;
  std::optional<double> lr;
  std::optional<std::size_t> steps;
  std::string judge_endpoint;
  std::string judge_model;
  bool stub_judge = false;
  int judge_retries = -1;
  int judge_concurrency = 0;
  bool force = false;
  std::string taxonomy;
  std::string judge_scores;
  int verbosity = 0;
};

/// Wraps a session handle.
class Session {
 public:
  Session() {
    if (vaur_session_create(&s_) != VAUR_OK) s_ = nullptr;
  }
  ~Session() { vaur_session_destroy(s_); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  vaur_session* get() const { return s_; }

 private:
  vaur_session* s_ = nullptr;
};

int check(vaur_status status) {
  if (status != VAUR_OK) {
    std::fprintf(stderr, "vaur: %s\n", vaur_last_error());
    return status == VAUR_DATA_ERROR ? 1 : 2;
  }
  return 0;
}

int configure(vaur_session* s, const Options& o) {
  static const std::map<std::string, vaur_task> tasks{
      {"qa", VAUR_TASK_QA}, {"tag", VAUR_TASK_TAG}, {"reason", VAUR_TASK_REASON}, {"cls", VAUR_TASK_CLS}};
  static const std::map<std::string, vaur_think> thinks{
      {"both", VAUR_THINK_BOTH}, {"on", VAUR_THINK_ON}, {"off", VAUR_THINK_OFF}};

  int rc = 0;
  auto apply = [&](vaur_status st) {
    if (rc == 0) rc = check(st);
  };
  if (!o.annotations.empty()) apply(vaur_session_set_annotations(s, o.annotations.c_str()));
  if (!o.predictions.empty()) apply(vaur_session_set_predictions(s, o.predictions.c_str()));
  apply(vaur_session_set_output_dir(s, o.out.c_str(), o.force ? 1 : 0));
  if (!o.taxonomy.empty()) apply(vaur_session_set_taxonomy(s, o.taxonomy.c_str()));
  if (!o.judge_scores.empty()) apply(vaur_session_set_judge_scores(s, o.judge_scores.c_str()));
  if (!o.task.empty()) apply(vaur_session_set_task(s, tasks.at(o.task)));
  apply(vaur_session_set_think(s, thinks.at(o.think)));
  apply(vaur_session_set_seed(s, o.seed));
  if (o.beta) apply(vaur_session_set_beta(s, *o.beta));
  if (o.group_size) apply(vaur_session_set_group_size(s, *o.group_size));
  if (o.lr) apply(vaur_session_set_learning_rate(s, *o.lr));
  if (o.steps) apply(vaur_session_set_steps(s, *o.steps));
  if (!o.judge_endpoint.empty()) apply(vaur_session_set_judge_endpoint(s, o.judge_endpoint.c_str()));
  if (!o.judge_model.empty()) apply(vaur_session_set_judge_model(s, o.judge_model.c_str()));
  if (o.judge_retries >= 0) apply(vaur_session_set_judge_retries(s, o.judge_retries));
  if (o.judge_concurrency > 0) apply(vaur_session_set_judge_concurrency(s, o.judge_concurrency));
  apply(vaur_session_set_judge_stub(s, o.stub_judge ? 1 : 0));
  return rc;
}

int run(vaur_status (*command)(vaur_session*), const Options& o) {
  vaur_set_log_level(o.verbosity);
  Session session;
  if (!session.get()) return check(VAUR_INTERNAL_ERROR);
  if (int rc = configure(session.get(), o)) return rc;
  const vaur_status st = command(session.get());
  std::fputs(vaur_session_summary(session.get()), stdout);
  const char* error = vaur_session_error(session.get());
  if (*error) std::fprintf(stderr, "vaur: %s\n", error);
  switch (st) {
    case VAUR_OK: return 0;
    case VAUR_DATA_ERROR: return 1;
    case VAUR_USAGE_ERROR: return 2;
    default:
      if (!*error) std::fprintf(stderr, "vaur: %s\n", vaur_last_error());
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video anomaly understanding toolkit: dataset checks, scoring and toy GRPO training"};
  app.set_version_flag("--version", std::string(vaur_version()));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory (created if absent)");
    sub->add_flag("--force", o.force, "Overwrite existing output files");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--taxonomy", o.taxonomy, "Taxonomy file {\"labels\": [...]}")->check(CLI::ExistingFile);
    sub->add_flag("-v,--verbose", o.verbosity, "More logging (repeatable)");
  };
  auto inputs = [&](CLI::App* sub, bool predictions) {
    sub->add_option("--annotations", o.annotations, "Annotation JSONL file")->required();
    if (predictions) sub->add_option("--predictions", o.predictions, "Prediction JSONL file")->required();
  };
  auto filters = [&](CLI::App* sub) {
    sub->add_option("--task", o.task, "Only score this task")->check(CLI::IsMember({"qa", "tag", "reason", "cls"}));
    sub->add_option("--think", o.think, "Think-mode filter")->check(CLI::IsMember({"on", "off", "both"}));
  };
  auto judge = [&](CLI::App* sub) {
    sub->add_option("--judge-endpoint", o.judge_endpoint, "Chat-completion URL of the judge");
    sub->add_option("--judge-model", o.judge_model, "Judge model name (required with --judge-endpoint)");
    sub->add_option("--judge-retries", o.judge_retries, "Retries per item")->check(CLI::NonNegativeNumber);
    sub->add_option("--judge-concurrency", o.judge_concurrency, "Requests in flight")->check(CLI::PositiveNumber);
    sub->add_flag("--stub-judge", o.stub_judge, "Use the offline word-overlap stub judge");
  };

  auto* validate = app.add_subcommand("validate", "Check an annotation file and report rejected records");
  inputs(validate, false);
  common(validate);

  auto* score = app.add_subcommand("score", "Score predictions against annotations");
  inputs(score, true);
  filters(score);
  judge(score);
  score->add_option("--judge-scores", o.judge_scores, "judge_scores.jsonl from a judge run")
      ->check(CLI::ExistingFile);
  common(score);

  auto* train = app.add_subcommand("train-toy", "Run GRPO on the toy benchmark suite");
  train->add_option("--beta", o.beta, "KL coefficient")->check(CLI::NonNegativeNumber);
  train->add_option("--group-size", o.group_size, "Candidates per prompt")->check(CLI::Range(2, 1 << 20));
  train->add_option("--lr", o.lr, "Learning rate");
  train->add_option("--steps", o.steps, "Training steps");
  common(train);

  auto* judge_cmd = app.add_subcommand("judge", "Score reasoning predictions with the judge");
  inputs(judge_cmd, true);
  judge_cmd->add_option("--think", o.think, "Think-mode filter")->check(CLI::IsMember({"on", "off", "both"}));
  judge(judge_cmd);
  common(judge_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (validate->parsed()) return run(vaur_cmd_validate, o);
  if (score->parsed()) return run(vaur_cmd_score, o);
  if (train->parsed()) return run(vaur_cmd_train_toy, o);
  return run(vaur_cmd_judge, o);
}
