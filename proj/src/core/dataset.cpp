// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace vaur::dataset {

using nlohmann::json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

bool AnnotationRecord::is_normal() const { return normalize_label(anomaly_class) == "normal"; }

Taxonomy::Taxonomy(std::vector<std::string> labels) {
  for (const auto& label : labels) {
    auto norm = normalize_label(label);
    if (norm.empty()) throw DatasetError("taxonomy: empty label");
    if (std::find(labels_.begin(), labels_.end(), norm) == labels_.end()) labels_.push_back(std::move(norm));
  }
  if (labels_.empty()) throw DatasetError("taxonomy: no labels");
}

Taxonomy Taxonomy::builtin() {
  // Keep in sync with config/taxonomy.json.
  return Taxonomy({"abuse", "arrest", "arson", "assault", "burglary", "explosion", "fighting",
                   "road accident", "robbery", "shooting", "shoplifting", "stealing", "vandalism",
                   "people falling", "fire", "water incident", "object falling", "traffic violation",
                   "equipment malfunction"});
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open taxonomy file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError("taxonomy file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array()) {
    throw DatasetError("taxonomy file " + path.string() + " must be {\"labels\": [...]}");
  }
  std::vector<std::string> labels;
  for (const auto& item : doc["labels"]) {
    if (!item.is_string()) throw DatasetError("taxonomy file " + path.string() + ": labels must be strings");
    labels.push_back(item.get<std::string>());
  }
  return Taxonomy(std::move(labels));
}

bool Taxonomy::contains(std::string_view label) const {
  const auto norm = normalize_label(label);
  return norm == "normal" || std::find(labels_.begin(), labels_.end(), norm) != labels_.end();
}

std::string_view violation_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::MissingField: return "MissingField";
    case ViolationCode::WrongType: return "WrongType";
    case ViolationCode::InvalidSplit: return "InvalidSplit";
    case ViolationCode::InvalidInterval: return "InvalidInterval";
    case ViolationCode::IntervalOutOfBounds: return "IntervalOutOfBounds";
    case ViolationCode::NormalWithInterval: return "NormalWithInterval";
    case ViolationCode::InvalidDuration: return "InvalidDuration";
    case ViolationCode::QaOptionCount: return "QaOptionCount";
    case ViolationCode::QaInvalidLabel: return "QaInvalidLabel";
    case ViolationCode::QaCorrectNotInOptions: return "QaCorrectNotInOptions";
    case ViolationCode::UnknownAnomalyClass: return "UnknownAnomalyClass";
    case ViolationCode::DuplicateVideoId: return "DuplicateVideoId";
  }
  return "Unknown";
}

namespace {

class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::vector<RecordViolation>& out)
      : obj_(obj), prefix_(std::move(prefix)), out_(out) {}

  std::string text(const char* key) {
    const json* v = find(key, true);
    if (v == nullptr) return {};
    if (!v->is_string()) {
      wrong_type(key, "a string");
      return {};
    }
    return v->get<std::string>();
  }

  double number(const char* key) {
    const json* v = find(key, true);
    if (v == nullptr) return 0.0;
    if (!v->is_number()) {
      wrong_type(key, "a number");
      return 0.0;
    }
    return v->get<double>();
  }

  /// Null and absent both mean "no value".
  const json* optional(const char* key) {
    const json* v = find(key, false);
    return v == nullptr || v->is_null() ? nullptr : v;
  }

  const json* object(const char* key) {
    const json* v = find(key, true);
    if (v != nullptr && !v->is_object()) {
      wrong_type(key, "an object");
      return nullptr;
    }
    return v;
  }

  void wrong_type(const char* key, const char* expected) {
    out_.push_back({ViolationCode::WrongType, prefix_ + key + " must be " + expected});
  }

 private:
  const json* find(const char* key, bool required) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) out_.push_back({ViolationCode::MissingField, prefix_ + key});
      return nullptr;
    }
    return &*it;
  }

  const json& obj_;
  std::string prefix_;
  std::vector<RecordViolation>& out_;
};

AnnotationRecord read_record(const json& obj, std::vector<RecordViolation>& violations) {
  AnnotationRecord r;
  FieldReader f(obj, "", violations);
  r.video_id = f.text("video_id");

  const auto split = f.text("split");
  if (split == "train") r.split = Split::Train;
  else if (split == "val") r.split = Split::Val;
  else if (split == "test") r.split = Split::Test;
  else if (obj.contains("split") && obj["split"].is_string())
    violations.push_back({ViolationCode::InvalidSplit, "split '" + split + "'"});

  if (const json* source = f.optional("source")) {
    if (source->is_string()) r.source = source->get<std::string>();
    else f.wrong_type("source", "a string");
  }
  r.judgement = f.text("judgement");
  r.description = f.text("description");

  if (const json* analysis = f.object("analysis")) {
    FieldReader a(*analysis, "analysis.", violations);
    r.analysis.specific_anomaly_type = a.text("specific_anomaly_type");
    r.analysis.location = a.text("location");
    r.analysis.key_evidence = a.text("key_evidence");
    r.analysis.detailed_explanation = a.text("detailed_explanation");
    r.analysis.cause_and_effect = a.text("cause_and_effect");
    r.analysis.conclusion = a.text("conclusion");
  }

  if (const json* qa = f.optional("qa")) {
    if (!qa->is_object()) {
      f.wrong_type("qa", "an object");
    } else {
      FieldReader q(*qa, "qa.", violations);
      QaPair pair;
      pair.question = q.text("question");
      if (const json* options = q.object("options")) {
        for (const auto& [label, text] : options->items()) {
          if (label.size() != 1 || label[0] < 'A' || label[0] > 'Z') {
            violations.push_back({ViolationCode::QaInvalidLabel, "qa option label '" + label + "'"});
            continue;
          }
          if (!text.is_string()) {
            q.wrong_type(("options." + label).c_str(), "a string");
            continue;
          }
          pair.options.push_back({label[0], text.get<std::string>()});
        }
      }
      const auto correct = q.text("correct");
      if (correct.size() == 1) {
        pair.correct = correct[0];
      } else if (qa->contains("correct") && (*qa)["correct"].is_string()) {
        violations.push_back({ViolationCode::QaInvalidLabel, "qa.correct '" + correct + "'"});
      }
      r.qa = std::move(pair);
    }
  }

  if (const json* temporal = f.optional("temporal")) {
    if (!temporal->is_array() || temporal->size() != 2 || !(*temporal)[0].is_number() ||
        !(*temporal)[1].is_number()) {
      f.wrong_type("temporal", "[start, end]");
    } else {
      r.temporal = TimeInterval{(*temporal)[0].get<double>(), (*temporal)[1].get<double>()};
    }
  }

  r.duration = f.number("duration");
  r.anomaly_class = f.text("anomaly_class");
  return r;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

std::vector<RecordViolation> validate(const AnnotationRecord& r, const Taxonomy& taxonomy) {
  std::vector<RecordViolation> out;
  if (r.video_id.empty()) out.push_back({ViolationCode::MissingField, "video_id is empty"});
  if (!std::isfinite(r.duration) || r.duration < 0.0) {
    out.push_back({ViolationCode::InvalidDuration, "duration must be a non-negative number"});
  }
  if (r.temporal) {
    if (!r.temporal->valid()) {
      out.push_back({ViolationCode::InvalidInterval, "temporal must satisfy end >= start >= 0"});
    } else if (r.temporal->end > r.duration) {
      out.push_back({ViolationCode::IntervalOutOfBounds, "temporal end exceeds duration"});
    }
    if (r.is_normal()) {
      out.push_back({ViolationCode::NormalWithInterval, "normal video carries a temporal interval"});
    }
  }
  if (!taxonomy.contains(r.anomaly_class)) {
    out.push_back({ViolationCode::UnknownAnomalyClass, "anomaly_class '" + r.anomaly_class + "'"});
  }
  if (r.qa) {
    if (r.qa->options.size() != 4) {
      out.push_back({ViolationCode::QaOptionCount,
                     "qa has " + std::to_string(r.qa->options.size()) + " options, expected 4"});
    }
    const bool found = std::any_of(r.qa->options.begin(), r.qa->options.end(),
                                   [&](const tags::ChoiceOption& o) { return o.label == r.qa->correct; });
    if (!found) {
      out.push_back({ViolationCode::QaCorrectNotInOptions,
                     "qa.correct '" + std::string(1, r.qa->correct) + "' is not an option"});
    }
  }
  return out;
}

LoadResult parse_annotations(std::istream& in, const Taxonomy& taxonomy) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw DatasetError("line " + std::to_string(line_no) + ": expected a JSON object");

    std::vector<RecordViolation> violations;
    auto record = read_record(obj, violations);
    if (violations.empty()) violations = validate(record, taxonomy);
    if (!record.video_id.empty() && !seen.insert(record.video_id).second) {
      violations.push_back({ViolationCode::DuplicateVideoId, "video_id '" + record.video_id + "' repeats"});
    }
    if (violations.empty()) {
      result.records.push_back(std::move(record));
    } else {
      result.rejections.push_back({line_no, record.video_id, std::move(violations)});
    }
  }
  if (in.bad()) throw DatasetError("read error");
  return result;
}

LoadResult load_annotations(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open annotation file " + path.string());
  try {
    return parse_annotations(in, taxonomy);
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

json to_json(const AnnotationRecord& r) {
  json analysis = {
      {"specific_anomaly_type", r.analysis.specific_anomaly_type},
      {"location", r.analysis.location},
      {"key_evidence", r.analysis.key_evidence},
      {"detailed_explanation", r.analysis.detailed_explanation},
      {"cause_and_effect", r.analysis.cause_and_effect},
      {"conclusion", r.analysis.conclusion},
  };
  json out = {
      {"video_id", r.video_id},
      {"split", split_name(r.split)},
      {"judgement", r.judgement},
      {"description", r.description},
      {"analysis", std::move(analysis)},
      {"duration", r.duration},
      {"anomaly_class", r.anomaly_class},
  };
  if (!r.source.empty()) out["source"] = r.source;
  if (r.qa) {
    json options = json::object();
    for (const auto& o : r.qa->options) options[std::string(1, o.label)] = o.text;
    out["qa"] = {{"question", r.qa->question}, {"options", std::move(options)},
                 {"correct", std::string(1, r.qa->correct)}};
  }
  if (r.temporal) out["temporal"] = {r.temporal->start, r.temporal->end};
  return out;
}

json to_json(const Rejection& rejection) {
  json violations = json::array();
  for (const auto& v : rejection.violations) {
    violations.push_back({{"code", violation_name(v.code)}, {"detail", v.detail}});
  }
  return {{"line", rejection.line}, {"video_id", rejection.video_id}, {"violations", std::move(violations)}};
}

std::string serialize_annotations(std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

BenchmarkStats compute_stats(std::span<const AnnotationRecord> records) {
  BenchmarkStats stats;
  stats.split_counts = {{Split::Train, 0}, {Split::Val, 0}, {Split::Test, 0}};
  std::set<std::string> classes;
  double seconds = 0.0;
  std::size_t words = 0;
  for (const auto& r : records) {
    ++stats.n_videos;
    ++stats.split_counts[r.split];
    seconds += r.duration;
    if (r.temporal) ++stats.n_temporal_annotations;
    if (!r.is_normal()) classes.insert(normalize_label(r.anomaly_class));
    words += count_words(r.description);
    for (const auto* field : {&r.analysis.specific_anomaly_type, &r.analysis.location,
                              &r.analysis.key_evidence, &r.analysis.detailed_explanation,
                              &r.analysis.cause_and_effect, &r.analysis.conclusion}) {
      words += count_words(*field);
    }
    if (r.qa) {
      words += count_words(r.qa->question);
      for (const auto& o : r.qa->options) words += count_words(o.text);
    }
  }
  stats.total_duration_hours = seconds / 3600.0;
  stats.n_anomaly_types = classes.size();
  stats.mean_words_per_video =
      stats.n_videos == 0 ? 0.0 : static_cast<double>(words) / static_cast<double>(stats.n_videos);
  return stats;
}

json to_json(const BenchmarkStats& stats) {
  json splits = json::object();
  for (const auto& [split, count] : stats.split_counts) splits[std::string(split_name(split))] = count;
  return {
      {"n_videos", stats.n_videos},
      {"total_duration_hours", stats.total_duration_hours},
      {"n_anomaly_types", stats.n_anomaly_types},
      {"split_counts", std::move(splits)},
      {"n_temporal_annotations", stats.n_temporal_annotations},
      {"mean_words_per_video", stats.mean_words_per_video},
  };
}

JoinResult join_predictions(std::span<const AnnotationRecord> records,
                            std::span<const metrics::PredictionRecord> predictions) {
  std::unordered_set<std::string> prediction_ids;
  std::set<std::tuple<std::string_view, TaskKind, bool>> keys;
  for (const auto& p : predictions) {
    if (!keys.emplace(p.sample_id, p.task, p.think_mode).second) {
      throw DuplicateIdError(p.sample_id + " [" + std::string(task_name(p.task)) + ", think " +
                             (p.think_mode ? "on" : "off") + "]");
    }
    prediction_ids.insert(p.sample_id);
  }
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].video_id, i);

  JoinResult join;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (auto it = by_id.find(predictions[j].sample_id); it != by_id.end()) {
      join.pairs.emplace_back(it->second, j);
    } else {
      join.unmatched_predictions.push_back(predictions[j].sample_id);
    }
  }
  for (const auto& r : records) {
    if (!prediction_ids.contains(r.video_id)) join.unmatched_annotations.push_back(r.video_id);
  }
  return join;
}

json to_json(const JoinResult& join) {
  return {{"matched", join.pairs.size()},
          {"unmatched_annotations", join.unmatched_annotations},
          {"unmatched_predictions", join.unmatched_predictions}};
}

std::vector<metrics::PredictionRecord> parse_predictions(std::istream& in) {
  std::vector<metrics::PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DatasetError(where + "malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw DatasetError(where + "expected a JSON object");
    auto need = [&](const char* key) -> const json& {
      auto it = obj.find(key);
      if (it == obj.end()) throw DatasetError(where + "missing field " + key);
      return *it;
    };
    const auto& id = need("sample_id");
    const auto& task = need("task");
    const auto& think = need("think_mode");
    const auto& text = need("response_text");
    if (!id.is_string() || !task.is_string() || !think.is_boolean() || !text.is_string()) {
      throw DatasetError(where + "fields must be sample_id:string, task:string, think_mode:bool, response_text:string");
    }
    const auto kind = parse_task_name(task.get<std::string>());
    if (!kind) throw DatasetError(where + "unknown task '" + task.get<std::string>() + "'");
    out.push_back({id.get<std::string>(), *kind, text.get<std::string>(), think.get<bool>()});
  }
  return out;
}

std::vector<metrics::PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open prediction file " + path.string());
  try {
    return parse_predictions(in);
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

rewards::GroundTruth ground_truth_for(const AnnotationRecord& record, TaskKind task) {
  rewards::GroundTruth truth;
  truth.task = task;
  switch (task) {
    case TaskKind::MultiChoiceQA:
      if (!record.qa) throw std::invalid_argument("record '" + record.video_id + "' has no QA pair");
      truth.correct_answer = std::string(1, record.qa->correct);
      truth.options = record.qa->options;
      break;
    case TaskKind::TemporalGrounding:
      truth.is_normal = record.is_normal();
      truth.anomaly_interval = record.temporal;
      if (!truth.is_normal && !truth.anomaly_interval) {
        throw std::invalid_argument("record '" + record.video_id + "' has no temporal annotation");
      }
      break;
    case TaskKind::Classification:
      truth.correct_answer = record.anomaly_class;
      truth.is_normal = record.is_normal();
      break;
    case TaskKind::Reasoning:
      truth.is_normal = record.is_normal();
      break;
  }
  return truth;
}

std::string analysis_text(const Analysis& a) {
  std::ostringstream out;
  out << "Specific Anomaly Type: " << a.specific_anomaly_type << "\n"
      << "Location: " << a.location << "\n"
      << "Key Evidence: " << a.key_evidence << "\n"
      << "Detailed Explanation: " << a.detailed_explanation << "\n"
      << "Cause and Effect: " << a.cause_and_effect << "\n"
      << "Conclusion: " << a.conclusion;
  return out.str();
}

}  // namespace vaur::dataset
