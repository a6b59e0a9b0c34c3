// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "metrics.hpp"
#include "output.hpp"
#include "policysim.hpp"
#include "tagparse.hpp"

namespace vaur::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<ThinkFilter> parse_think_filter(std::string_view text) {
  if (text == "both") return ThinkFilter::Both;
  if (text == "on") return ThinkFilter::On;
  if (text == "off") return ThinkFilter::Off;
  return std::nullopt;
}

grpo::GrpoConfig RunConfig::grpo_config() const {
  auto cfg = grpo::toy_defaults();
  if (beta) cfg.beta = *beta;
  if (group_size) cfg.group_size = *group_size;
  if (learning_rate) cfg.learning_rate = *learning_rate;
  if (steps) cfg.max_steps = *steps;
  cfg.seed = seed;
  return cfg;
}

judge::JudgeConfig RunConfig::judge_config() const {
  auto cfg = judge;
  cfg.stub_seed = seed;
  return cfg;
}

namespace {

/// Thrown inside commands and mapped to a CommandResult at the boundary.
struct CommandFailure {
  ExitCode code;
  std::string message;
};

[[noreturn]] void usage_error(std::string message) { throw CommandFailure{ExitCode::UsageError, std::move(message)}; }

void require_file(const fs::path& path, std::string_view flag) {
  if (path.empty()) usage_error(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) usage_error(std::string(flag) + " file '" + path.string() + "' not found");
}

dataset::Taxonomy load_taxonomy(const RunConfig& config) {
  if (config.taxonomy.empty()) return dataset::Taxonomy::builtin();
  require_file(config.taxonomy, "--taxonomy");
  try {
    return dataset::Taxonomy::load(config.taxonomy);
  } catch (const dataset::DatasetError& e) {
    usage_error(e.what());
  }
}

OutputDir open_output(const RunConfig& config, std::initializer_list<std::string_view> names) {
  try {
    OutputDir out(config.output_dir, config.force);
    out.claim(names);
    return out;
  } catch (const OutputExistsError& e) {
    usage_error(e.what());
  } catch (const fs::filesystem_error& e) {
    usage_error(std::string("cannot create output directory: ") + e.what());
  }
}

template <typename Fn>
CommandResult run_guarded(std::string_view name, Fn&& body) {
  try {
    return body();
  } catch (const CommandFailure& f) {
    spdlog::debug("{}: exit {}: {}", name, static_cast<int>(f.code), f.message);
    return {f.code, {}, f.message};
  } catch (const dataset::DatasetError& e) {
    return {ExitCode::DataError, {}, e.what()};
  } catch (const std::invalid_argument& e) {
    return {ExitCode::DataError, {}, e.what()};
  } catch (const std::exception& e) {
    return {ExitCode::DataError, {}, std::string(name) + ": " + e.what()};
  }
}

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& line : lines) {
    out += line.dump();
    out += '\n';
  }
  return out;
}

json optional_json(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

json to_json(const metrics::Accuracy& acc) {
  return {{"correct", acc.correct}, {"total", acc.total}, {"value", optional_json(acc.value())}};
}

json to_json(const metrics::VauEvalScore& s) {
  return {{"cls", s.cls}, {"km", s.km}, {"flu", s.flu}, {"inf", s.inf}, {"fac", s.fac}, {"total", s.total}};
}

std::string display_percent(const std::optional<double>& fraction) {
  return fraction ? metrics::format_percent(*fraction) : "-";
}

/// Left-aligned first column, right-aligned others.
std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  };
  measure(header);
  for (const auto& row : rows) measure(row);

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      if (c > 0) out << "  ";
      out << (c == 0 ? row[c] + pad : pad + row[c]);
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

bool passes(const RunConfig& config, const metrics::PredictionRecord& p) {
  if (config.task && p.task != *config.task) return false;
  if (config.think == ThinkFilter::On && !p.think_mode) return false;
  if (config.think == ThinkFilter::Off && p.think_mode) return false;
  return true;
}

std::string_view think_filter_name(ThinkFilter f) {
  switch (f) {
    case ThinkFilter::On: return "on";
    case ThinkFilter::Off: return "off";
    case ThinkFilter::Both: break;
  }
  return "both";
}

/// Loaded and joined inputs shared by score and judge.
struct JoinedInputs {
  dataset::LoadResult annotations;
  std::vector<metrics::PredictionRecord> predictions;  // after filters
  std::size_t n_predictions_read = 0;
  dataset::JoinResult join;
};

JoinedInputs load_joined(const RunConfig& config, const dataset::Taxonomy& taxonomy, const OutputDir& out,
                         const std::function<bool(const metrics::PredictionRecord&)>& keep) {
  JoinedInputs in;
  in.annotations = dataset::load_annotations(config.annotations, taxonomy);
  auto all = dataset::load_predictions(config.predictions);
  in.n_predictions_read = all.size();
  for (auto& p : all) {
    if (keep(p)) in.predictions.push_back(std::move(p));
  }
  try {
    in.join = dataset::join_predictions(in.annotations.records, in.predictions);
  } catch (const dataset::DuplicateIdError& e) {
    throw CommandFailure{ExitCode::DataError, e.what()};
  }
  out.write("join_report.json", to_json(in.join).dump(2) + "\n");
  if (!in.join.unmatched_predictions.empty()) {
    std::string message = "join failed: " + std::to_string(in.join.unmatched_predictions.size()) +
                          " prediction(s) without an annotation:";
    for (const auto& id : in.join.unmatched_predictions) message += " " + id;
    if (!in.annotations.rejections.empty()) {
      message += " (" + std::to_string(in.annotations.rejections.size()) + " annotation record(s) were rejected)";
    }
    throw CommandFailure{ExitCode::DataError, message};
  }
  return in;
}

std::string source_of(const dataset::AnnotationRecord& r) { return r.source.empty() ? "-" : r.source; }

}  // namespace

judge::JudgeRequest judge_request_for(const dataset::AnnotationRecord& record,
                                      const metrics::PredictionRecord& prediction) {
  const auto parsed = tags::parse_response(prediction.raw_response, TaskKind::Reasoning, {.require_think = false});
  const std::string whole(trim(prediction.raw_response));
  judge::JudgeRequest req;
  req.gt_description = record.description;
  req.gt_analysis = dataset::analysis_text(record.analysis);
  req.model_description = whole;
  req.model_analysis = whole;
  if (parsed.response) {
    if (parsed.response->think && !trim(*parsed.response->think).empty()) {
      req.model_description = std::string(trim(*parsed.response->think));
    }
    req.model_analysis = parsed.response->answer;
  }
  return req;
}

// ---------------------------------------------------------------- validate

CommandResult cmd_validate(const RunConfig& config) {
  return run_guarded("validate", [&]() -> CommandResult {
    require_file(config.annotations, "--annotations");
    const auto taxonomy = load_taxonomy(config);
    const auto out = open_output(config, {"rejections.jsonl", "stats.json"});

    const auto loaded = dataset::load_annotations(config.annotations, taxonomy);
    std::vector<json> lines;
    for (const auto& r : loaded.rejections) lines.push_back(dataset::to_json(r));
    out.write("rejections.jsonl", jsonl(lines));

    json stats = {{"accepted", loaded.records.size()},
                  {"rejected", loaded.rejections.size()},
                  {"stats", dataset::to_json(dataset::compute_stats(loaded.records))}};
    out.write("stats.json", stats.dump(2) + "\n");

    std::ostringstream summary;
    summary << config.annotations.string() << ": " << loaded.records.size() << " accepted, "
            << loaded.rejections.size() << " rejected\n";
    for (const auto& r : loaded.rejections) {
      summary << "  line " << r.line << " (" << (r.video_id.empty() ? "?" : r.video_id) << "):";
      for (const auto& v : r.violations) summary << ' ' << dataset::violation_name(v.code) << " [" << v.detail << ']';
      summary << '\n';
    }
    return {loaded.rejections.empty() ? ExitCode::Success : ExitCode::DataError, summary.str(), {}};
  });
}

// ---------------------------------------------------------------- score

namespace {

using ScoreKey = std::pair<std::string, bool>;  // (sample_id, think_mode)

std::map<ScoreKey, metrics::VauEvalScore> load_judge_scores(const fs::path& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open judge scores '" + path.string() + "'");
  std::map<ScoreKey, metrics::VauEvalScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      if (j.contains("aggregate")) continue;
      const auto& s = j.at("score");
      if (s.is_null()) continue;
      const auto score = metrics::VauEvalScore::from_dimensions(
          s.at("cls").get<double>(), s.at("km").get<double>(), s.at("flu").get<double>(), s.at("inf").get<double>(),
          s.at("fac").get<double>());
      scores[{j.at("sample_id").get<std::string>(), j.at("think_mode").get<bool>()}] = score;
    } catch (const json::exception& e) {
      throw dataset::DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scores;
}

struct Subset {
  std::vector<metrics::PredictionRecord> predictions;
  std::vector<std::size_t> joined;  // indices into JoinResult::pairs
};

/// Groups joined pairs of one task by source, in name order. Sources are never
/// pooled.
std::vector<std::pair<std::string, Subset>> group_by_source(const JoinedInputs& in, TaskKind task) {
  std::map<std::string, Subset> by_source;
  for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
    const auto [ai, pi] = in.join.pairs[k];
    const auto& p = in.predictions[pi];
    if (p.task != task) continue;
    auto& g = by_source[source_of(in.annotations.records[ai])];
    g.predictions.push_back(p);
    g.joined.push_back(k);
  }
  return {std::make_move_iterator(by_source.begin()), std::make_move_iterator(by_source.end())};
}

std::vector<metrics::PredictionRecord> with_think(const std::vector<metrics::PredictionRecord>& ps, bool think) {
  std::vector<metrics::PredictionRecord> out;
  for (const auto& p : ps) {
    if (p.think_mode == think) out.push_back(p);
  }
  return out;
}

std::string percent_key(double t) {
  std::ostringstream s;
  s << t;
  return s.str();
}

json to_json(const metrics::GroundingScore& g) {
  json recall = json::object();
  json recall_all = json::object();
  for (const auto& r : g.recall_at) recall[percent_key(r.threshold)] = optional_json(r.value);
  for (const auto& r : g.recall_at_all) recall_all[percent_key(r.threshold)] = optional_json(r.value);
  return {{"miou", g.miou},
          {"miou_anomalous", optional_json(g.miou_anomalous)},
          {"recall_at", recall},
          {"recall_at_all", recall_all},
          {"n_samples", g.n_samples},
          {"n_anomalous", g.n_anomalous}};
}

}  // namespace

CommandResult cmd_score(const RunConfig& config) {
  return run_guarded("score", [&]() -> CommandResult {
    require_file(config.annotations, "--annotations");
    require_file(config.predictions, "--predictions");
    if (!config.judge_scores.empty()) require_file(config.judge_scores, "--judge-scores");
    const auto taxonomy = load_taxonomy(config);
    const auto out = open_output(
        config, {"metrics.json", "metrics.txt", "per_sample.jsonl", "join_report.json", "iou_histogram.csv"});

    const auto in = load_joined(config, taxonomy, out, [&](const auto& p) { return passes(config, p); });
    const auto index = metrics::index_annotations(in.annotations.records);

    // Judge scores for reasoning pairs, keyed by (sample_id, think_mode).
    std::map<ScoreKey, metrics::VauEvalScore> judged;
    bool judge_available = false;
    if (!config.judge_scores.empty()) {
      judged = load_judge_scores(config.judge_scores);
      judge_available = true;
    } else if (config.judge.stub) {
      std::vector<judge::JudgeRequest> requests;
      std::vector<ScoreKey> keys;
      for (const auto& [ai, pi] : in.join.pairs) {
        const auto& p = in.predictions[pi];
        if (p.task != TaskKind::Reasoning) continue;
        requests.push_back(judge_request_for(in.annotations.records[ai], p));
        keys.emplace_back(p.sample_id, p.think_mode);
      }
      auto jcfg = config.judge_config();
      jcfg.max_concurrency = 1;
      judge::StubJudgeBackend backend(jcfg.stub_seed);
      const auto outcomes = judge::score_batch(requests, jcfg, backend);
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].score) judged[keys[i]] = *outcomes[i].score;
      }
      judge_available = true;
    }

    std::set<TaskKind> present;
    for (const auto& [ai, pi] : in.join.pairs) present.insert(in.predictions[pi].task);

    json report = {
        {"annotations", {{"accepted", in.annotations.records.size()}, {"rejected", in.annotations.rejections.size()}}},
        {"predictions", {{"read", in.n_predictions_read}, {"after_filter", in.predictions.size()},
                         {"joined", in.join.pairs.size()}}},
        {"filters",
         {{"task", config.task ? json(std::string(task_name(*config.task))) : json(nullptr)},
          {"think", std::string(think_filter_name(config.think))}}},
    };
    json tasks = json::object();
    std::ostringstream text;

    // Per-sample rows in prediction order; each task fills its own fields.
    std::vector<json> per_sample(in.join.pairs.size());
    for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
      const auto [ai, pi] = in.join.pairs[k];
      const auto& p = in.predictions[pi];
      per_sample[k] = {{"sample_id", p.sample_id},
                       {"task", std::string(task_name(p.task))},
                       {"think_mode", p.think_mode},
                       {"source", in.annotations.records[ai].source}};
    }

    // Multiple-choice QA accuracy, with reasoning scores alongside.
    const bool has_qa = present.contains(TaskKind::MultiChoiceQA);
    const bool has_reason = present.contains(TaskKind::Reasoning);
    if (has_qa) {
      json groups = json::array();
      for (const auto& [source, subset] : group_by_source(in, TaskKind::MultiChoiceQA)) {
        const auto acc = metrics::qa_accuracy(subset.predictions, index);
        groups.push_back({{"source", source},
                          {"acc_without_think", to_json(acc.without_think)},
                          {"acc_with_think", to_json(acc.with_think)}});
      }
      for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
        const auto [ai, pi] = in.join.pairs[k];
        const auto& p = in.predictions[pi];
        if (p.task != TaskKind::MultiChoiceQA) continue;
        const auto& record = in.annotations.records[ai];
        const auto truth = dataset::ground_truth_for(record, TaskKind::MultiChoiceQA);
        const auto view = metrics::evaluation_view(p.raw_response, TaskKind::MultiChoiceQA);
        const auto choice = tags::extract_choice(view.answer, truth.options);
        per_sample[k]["predicted"] = choice.label ? json(std::string(1, *choice.label)) : json(nullptr);
        per_sample[k]["correct"] = metrics::qa_correct(p, record);
      }
      tasks["qa"] = {{"groups", groups}};
    }

    std::map<std::string, std::optional<metrics::VauEvalScore>> reason_by_source;
    std::vector<std::pair<std::string, std::optional<metrics::VauEvalScore>>> reason_order;
    if (has_reason) {
      json groups = json::array();
      for (const auto& [source, subset] : group_by_source(in, TaskKind::Reasoning)) {
        std::vector<metrics::VauEvalScore> scores;
        for (const auto& p : subset.predictions) {
          if (auto it = judged.find({p.sample_id, p.think_mode}); it != judged.end()) scores.push_back(it->second);
        }
        std::optional<metrics::VauEvalScore> agg;
        if (!scores.empty()) agg = metrics::aggregate_vau_eval(scores);
        reason_by_source[source] = agg;
        reason_order.emplace_back(source, agg);
        groups.push_back({{"source", source},
                          {"n_pairs", subset.predictions.size()},
                          {"n_scored", scores.size()},
                          {"vau_eval", agg ? to_json(*agg) : json(nullptr)}});
      }
      for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
        const auto& p = in.predictions[in.join.pairs[k].second];
        if (p.task != TaskKind::Reasoning) continue;
        auto it = judged.find({p.sample_id, p.think_mode});
        per_sample[k]["judge"] = it != judged.end() ? to_json(it->second) : json(nullptr);
      }
      tasks["reason"] = {{"judge_available", judge_available}, {"groups", groups}};
    }

    if (has_qa || has_reason) {
      std::vector<std::pair<std::string, std::vector<std::string>>> rows;
      auto row_for = [&rows](const std::string& source) -> std::vector<std::string>& {
        for (auto& [name, row] : rows) {
          if (name == source) return row;
        }
        return rows.emplace_back(source, std::vector<std::string>{}).second;
      };
      if (has_qa) {
        for (const auto& g : tasks["qa"]["groups"]) {
          const auto source = g["source"].get<std::string>();
          auto& row = row_for(source);
          row = {source, g["acc_without_think"]["value"].is_null()
                             ? "-"
                             : metrics::format_percent(g["acc_without_think"]["value"].get<double>()),
                 g["acc_with_think"]["value"].is_null()
                     ? "-"
                     : metrics::format_percent(g["acc_with_think"]["value"].get<double>())};
        }
      }
      for (const auto& [source, agg] : reason_order) {
        auto& row = row_for(source);
        if (row.empty()) row = {source, "-", "-"};
      }
      std::vector<std::vector<std::string>> table;
      for (auto& [source, row] : rows) {
        auto it = reason_by_source.find(source);
        if (it != reason_by_source.end() && it->second) {
          const auto& s = *it->second;
          for (double v : {s.cls, s.km, s.flu, s.inf, s.fac, s.total}) row.push_back(metrics::format_fixed2(v));
        } else {
          row.insert(row.end(), 6, "-");
        }
        table.push_back(row);
      }
      text << "Multiple-choice QA and reasoning\n"
           << render_table({"Dataset", "Acc w/o think", "Acc w/ think", "CLS", "KM", "FLU", "INF", "FAC", "Total"},
                           table);
      if (has_reason && !judge_available) text << "(no judge scores: pass --judge-scores or --stub-judge)\n";
      text << '\n';
    }

    // Temporal grounding.
    std::array<std::array<std::size_t, 10>, 2> histogram{};
    if (present.contains(TaskKind::TemporalGrounding)) {
      json groups = json::array();
      std::vector<std::vector<std::string>> table;
      for (const auto& [source, subset] : group_by_source(in, TaskKind::TemporalGrounding)) {
        json entry = {{"source", source}};
        std::vector<std::string> row{source};
        for (bool think : {false, true}) {
          const auto ps = with_think(subset.predictions, think);
          const auto key = think ? "with_think" : "without_think";
          if (ps.empty()) {
            entry[key] = nullptr;
            row.insert(row.end(), 4, "-");
            continue;
          }
          const auto g = metrics::grounding_score(ps, index);
          entry[key] = to_json(g);
          row.push_back(metrics::format_fixed2(g.miou));
          for (const auto& r : g.recall_at) row.push_back(display_percent(r.value));
        }
        groups.push_back(entry);
        table.push_back(row);
      }
      for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
        const auto [ai, pi] = in.join.pairs[k];
        const auto& p = in.predictions[pi];
        if (p.task != TaskKind::TemporalGrounding) continue;
        const auto view = metrics::evaluation_view(p.raw_response, TaskKind::TemporalGrounding);
        const double iou = metrics::sample_iou(p, in.annotations.records[ai]);
        per_sample[k]["iou"] = iou;
        per_sample[k]["predicted_interval"] =
            view.glue ? json::array({view.glue->start, view.glue->end}) : json(nullptr);
        per_sample[k]["declared_normal"] = rewards::declares_normal(view);
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(iou * 10.0 + 1e-9)));
        ++histogram[p.think_mode ? 1 : 0][bin];
      }
      tasks["tag"] = {{"groups", groups}};
      text << "Temporal grounding (mIoU as a fraction, R@t in percent of anomalous samples)\n"
           << render_table({"Dataset", "mIoU", "R@0.3", "R@0.5", "R@0.7", "mIoU+think", "R@0.3+think",
                            "R@0.5+think", "R@0.7+think"},
                           table)
           << '\n';
    }
    {
      std::ostringstream csv;
      csv << "bin_start,bin_end,think_off,think_on\n";
      for (std::size_t b = 0; b < 10; ++b) {
        csv << b / 10 << '.' << b % 10 << ',' << (b + 1) / 10 << '.' << (b + 1) % 10 << ',' << histogram[0][b] << ','
            << histogram[1][b] << '\n';
      }
      out.write("iou_histogram.csv", csv.str());
    }

    // Classification.
    if (present.contains(TaskKind::Classification)) {
      json groups = json::array();
      std::vector<std::vector<std::string>> table;
      for (const auto& [source, subset] : group_by_source(in, TaskKind::Classification)) {
        json entry = {{"source", source}};
        std::vector<std::string> row{source};
        for (bool think : {false, true}) {
          const auto ps = with_think(subset.predictions, think);
          const auto acc = metrics::classification_accuracy(ps, index, taxonomy);
          entry[think ? "with_think" : "without_think"] = {{"binary", to_json(acc.binary)},
                                                           {"multi", to_json(acc.multi)}};
          row.push_back(display_percent(acc.binary.value()));
          row.push_back(display_percent(acc.multi.value()));
        }
        groups.push_back(entry);
        table.push_back(row);
      }
      for (std::size_t k = 0; k < in.join.pairs.size(); ++k) {
        const auto [ai, pi] = in.join.pairs[k];
        const auto& p = in.predictions[pi];
        if (p.task != TaskKind::Classification) continue;
        const std::array<metrics::PredictionRecord, 1> one{p};
        const auto acc = metrics::classification_accuracy(one, index, taxonomy);
        const auto view = metrics::evaluation_view(p.raw_response, TaskKind::Classification);
        per_sample[k]["predicted"] = normalize_label(view.answer);
        per_sample[k]["binary_correct"] = acc.binary.correct == 1;
        per_sample[k]["multi_correct"] = acc.multi.correct == 1;
      }
      tasks["cls"] = {{"groups", groups}};
      text << "Classification\n"
           << render_table({"Dataset", "Bin. Acc", "Multi Acc", "Bin. Acc+think", "Multi Acc+think"}, table) << '\n';
    }

    report["tasks"] = tasks;
    if (present.empty()) text << "no predictions after filtering\n";

    out.write("per_sample.jsonl", jsonl(per_sample));
    out.write("metrics.json", report.dump(2) + "\n");
    out.write("metrics.txt", text.str());
    return {ExitCode::Success, text.str(), {}};
  });
}

// ---------------------------------------------------------------- train-toy

namespace {

json to_json(const policysim::ToyEvaluation& e) {
  json by_task = json::object();
  for (const auto& [task, v] : e.expected_reward_by_task) by_task[std::string(task_name(task))] = v;
  return {{"expected_reward", e.expected_reward},
          {"expected_reward_by_task", by_task},
          {"kl", e.kl},
          {"argmax_correct_fraction", e.argmax_correct_fraction}};
}

json to_json(const policysim::ToyLogRow& row) {
  json j = {{"step", row.step}, {"eval", to_json(row.eval)}};
  if (row.train) {
    json components = json::object();
    for (const auto& [c, v] : row.train->component_means) components[std::string(rewards::component_name(c))] = v;
    j["train"] = {{"objective", row.train->objective_value},
                  {"mean_reward", row.train->mean_reward},
                  {"kl", row.train->kl_value},
                  {"component_means", components}};
  } else {
    j["train"] = nullptr;
  }
  return j;
}

void write_log(const OutputDir& out, const std::vector<policysim::ToyLogRow>& rows, const json* error_row) {
  std::vector<json> lines;
  std::ostringstream csv;
  csv << "step,expected_reward,kl,argmax_correct_fraction,sampled_mean_reward\n";
  for (const auto& row : rows) {
    lines.push_back(to_json(row));
    csv << row.step << ',' << json(row.eval.expected_reward).dump() << ',' << json(row.eval.kl).dump() << ','
        << json(row.eval.argmax_correct_fraction).dump() << ','
        << (row.train ? json(row.train->mean_reward).dump() : std::string()) << '\n';
  }
  if (error_row) lines.push_back(*error_row);
  out.write("train_log.jsonl", jsonl(lines));
  out.write("reward_curve.csv", csv.str());
}

}  // namespace

CommandResult cmd_train_toy(const RunConfig& config) {
  return run_guarded("train-toy", [&]() -> CommandResult {
    const auto cfg = config.grpo_config();
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      usage_error(e.what());
    }
    const auto out = open_output(config, {"train_log.jsonl", "reward_curve.csv", "summary.json", "summary.txt"});
    const auto suite = policysim::make_benchmark_suite();

    policysim::ToyTrainingResult result;
    try {
      result = policysim::train_toy(cfg, suite);
    } catch (const policysim::TrainingDiverged& e) {
      spdlog::error("training diverged at {}", e.what());
      const json error_row = {{"step", e.step()}, {"error", e.what()}};
      write_log(out, e.rows(), &error_row);
      throw CommandFailure{ExitCode::DataError, std::string("training diverged: ") + e.what()};
    }
    write_log(out, result.rows, nullptr);

    const auto& first = result.initial();
    const auto& last = result.final();
    json prompts = json::array();
    for (std::size_t k = 0; k < suite.size(); ++k) {
      prompts.push_back({{"prompt_id", suite[k].prompt_id},
                         {"task", std::string(task_name(suite[k].task))},
                         {"argmax_correct", static_cast<bool>(last.argmax_correct[k])},
                         {"final_logits", result.final_logits[k]}});
    }
    const json summary = {
        {"config",
         {{"beta", cfg.beta},
          {"group_size", cfg.group_size},
          {"learning_rate", cfg.learning_rate},
          {"steps", cfg.max_steps},
          {"seed", cfg.seed}}},
        {"initial", to_json(first)},
        {"final", to_json(last)},
        {"improved", last.expected_reward > first.expected_reward},
        {"prompts", prompts},
    };
    out.write("summary.json", summary.dump(2) + "\n");

    std::vector<std::vector<std::string>> table;
    auto add = [&](const std::string& name, double a, double b) {
      table.push_back({name, metrics::format_fixed2(a), metrics::format_fixed2(b)});
    };
    add("mean reward", first.expected_reward, last.expected_reward);
    for (const auto& [task, v] : first.expected_reward_by_task) {
      add("  " + std::string(task_name(task)), v, last.expected_reward_by_task.at(task));
    }
    table.push_back({"argmax correct (%)", metrics::format_percent(first.argmax_correct_fraction),
                     metrics::format_percent(last.argmax_correct_fraction)});
    std::ostringstream s;
    s << std::setprecision(6);
    s << "toy GRPO: beta=" << cfg.beta << " M=" << cfg.group_size << " lr=" << cfg.learning_rate
      << " steps=" << cfg.max_steps << " seed=" << cfg.seed << "\n"
      << render_table({"", "step 0", "step " + std::to_string(cfg.max_steps)}, table) << "exact KL to reference: "
      << json(last.kl).dump() << "\n";
    out.write("summary.txt", s.str());
    return {ExitCode::Success, s.str(), {}};
  });
}

// ---------------------------------------------------------------- judge

CommandResult cmd_judge(const RunConfig& config) {
  return run_guarded("judge", [&]() -> CommandResult {
    const auto jcfg = config.judge_config();
    try {
      jcfg.validate();
    } catch (const std::invalid_argument& e) {
      usage_error(e.what());
    }
    if (config.task && *config.task != TaskKind::Reasoning) usage_error("judge scores reasoning predictions only");
    require_file(config.annotations, "--annotations");
    require_file(config.predictions, "--predictions");
    const auto taxonomy = load_taxonomy(config);
    const auto out = open_output(config, {"judge_scores.jsonl", "join_report.json"});

    const auto in = load_joined(config, taxonomy, out, [&](const auto& p) {
      return p.task == TaskKind::Reasoning && passes(config, p);
    });

    std::vector<judge::JudgeRequest> requests;
    for (const auto& [ai, pi] : in.join.pairs) {
      requests.push_back(judge_request_for(in.annotations.records[ai], in.predictions[pi]));
    }
    const auto outcomes = judge::score_batch(requests, jcfg);

    std::vector<json> lines;
    std::vector<metrics::VauEvalScore> scores;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      const auto& p = in.predictions[in.join.pairs[k].second];
      const auto& o = outcomes[k];
      json line = {{"sample_id", p.sample_id}, {"think_mode", p.think_mode}, {"attempts", o.attempts}};
      if (o.score) {
        line["score"] = to_json(*o.score);
        line["error"] = nullptr;
        scores.push_back(*o.score);
      } else {
        line["score"] = nullptr;
        line["error"] = o.error;
      }
      lines.push_back(line);
    }
    const std::size_t failed = outcomes.size() - scores.size();
    std::optional<metrics::VauEvalScore> agg;
    if (!scores.empty()) agg = metrics::aggregate_vau_eval(scores);
    lines.push_back({{"aggregate", agg ? to_json(*agg) : json(nullptr)},
                     {"n_pairs", outcomes.size()},
                     {"n_scored", scores.size()},
                     {"n_failed", failed},
                     {"judge", jcfg.stub ? std::string("stub") : jcfg.model}});
    out.write("judge_scores.jsonl", jsonl(lines));

    std::ostringstream s;
    s << "judged " << outcomes.size() << " pair(s): " << scores.size() << " scored, " << failed << " failed"
      << (jcfg.stub ? " (stub judge)" : "") << "\n";
    if (agg) {
      s << render_table({"", "CLS", "KM", "FLU", "INF", "FAC", "Total"},
                        {{"mean over " + std::to_string(scores.size()), metrics::format_fixed2(agg->cls),
                          metrics::format_fixed2(agg->km), metrics::format_fixed2(agg->flu),
                          metrics::format_fixed2(agg->inf), metrics::format_fixed2(agg->fac),
                          metrics::format_fixed2(agg->total)}});
    }
    return {failed == 0 ? ExitCode::Success : ExitCode::DataError, s.str(),
            failed == 0 ? std::string() : std::to_string(failed) + " judge item(s) failed"};
  });
}

}  // namespace vaur::cli
