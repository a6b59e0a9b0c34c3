// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Benchmark annotation files: one JSON object per line.
//
//   {"video_id": "...", "split": "train|val|test", "source": "msad",
//    "judgement": "...", "description": "...",
//    "analysis": {"specific_anomaly_type": "...", "location": "...",
//                 "key_evidence": "...", "detailed_explanation": "...",
//                 "cause_and_effect": "...", "conclusion": "..."},
//    "qa": {"question": "...", "options": {"A": "...", ...}, "correct": "B"},
//    "temporal": [start, end], "duration": 42.0, "anomaly_class": "fighting"}
//
// "source", "qa" and "temporal" are optional (absent or null).

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "prediction.hpp"
#include "rewards.hpp"
#include "tagparse.hpp"
#include "types.hpp"

namespace vaur::dataset {

/// File-level failure: unreadable file or a line that is not a JSON object.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateIdError : public DatasetError {
 public:
  explicit DuplicateIdError(const std::string& id)
      : DatasetError("duplicate prediction sample_id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

enum class Split { Train, Val, Test };

std::string_view split_name(Split split);

struct Analysis {
  std::string specific_anomaly_type;
  std::string location;
  std::string key_evidence;
  std::string detailed_explanation;
  std::string cause_and_effect;
  std::string conclusion;

  bool operator==(const Analysis&) const = default;
};

struct QaPair {
  std::string question;
  std::vector<tags::ChoiceOption> options;
  char correct = 'A';

  bool operator==(const QaPair&) const = default;
};

struct AnnotationRecord {
  std::string video_id;
  Split split = Split::Train;
  /// Source dataset, used as the reporting group key. Empty when unspecified.
  std::string source;
  std::string judgement;
  std::string description;
  Analysis analysis;
  std::optional<QaPair> qa;
  std::optional<TimeInterval> temporal;
  double duration = 0.0;
  std::string anomaly_class;

  bool is_normal() const;
  bool operator==(const AnnotationRecord&) const = default;
};

/// Valid anomaly_class labels. "normal" is always accepted.
class Taxonomy {
 public:
  explicit Taxonomy(std::vector<std::string> labels);

  /// The shipped default list (also in config/taxonomy.json).
  static Taxonomy builtin();
  /// Reads {"labels": [...]}; throws DatasetError.
  static Taxonomy load(const std::filesystem::path& path);

  bool contains(std::string_view label) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;  // normalized
};

enum class ViolationCode {
  MissingField,
  WrongType,
  InvalidSplit,
  InvalidInterval,
  IntervalOutOfBounds,
  NormalWithInterval,
  InvalidDuration,
  QaOptionCount,
  QaInvalidLabel,
  QaCorrectNotInOptions,
  UnknownAnomalyClass,
  DuplicateVideoId,
};

std::string_view violation_name(ViolationCode code);

struct RecordViolation {
  ViolationCode code;
  std::string detail;
};

struct Rejection {
  std::size_t line = 0;  // 1-based
  std::string video_id;
  std::vector<RecordViolation> violations;
};

struct LoadResult {
  std::vector<AnnotationRecord> records;
  std::vector<Rejection> rejections;
};

LoadResult load_annotations(const std::filesystem::path& path, const Taxonomy& taxonomy = Taxonomy::builtin());
LoadResult parse_annotations(std::istream& in, const Taxonomy& taxonomy = Taxonomy::builtin());

/// Checks record invariants; empty when the record is valid.
std::vector<RecordViolation> validate(const AnnotationRecord& record, const Taxonomy& taxonomy);

nlohmann::json to_json(const AnnotationRecord& record);
nlohmann::json to_json(const Rejection& rejection);
std::string serialize_annotations(std::span<const AnnotationRecord> records);

struct BenchmarkStats {
  std::size_t n_videos = 0;
  double total_duration_hours = 0.0;
  std::size_t n_anomaly_types = 0;
  std::map<Split, std::size_t> split_counts;
  std::size_t n_temporal_annotations = 0;
  double mean_words_per_video = 0.0;
};

/// Word counts cover description, the six analysis fields and QA text.
BenchmarkStats compute_stats(std::span<const AnnotationRecord> records);
nlohmann::json to_json(const BenchmarkStats& stats);

struct JoinResult {
  /// (annotation index, prediction index), in prediction order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::string> unmatched_annotations;
  std::vector<std::string> unmatched_predictions;
};

/// Inner join on video_id = sample_id. A sample_id may repeat across tasks and
/// think modes; a repeated (sample_id, task, think_mode) throws DuplicateIdError.
JoinResult join_predictions(std::span<const AnnotationRecord> records,
                            std::span<const metrics::PredictionRecord> predictions);
nlohmann::json to_json(const JoinResult& join);

/// Reads {"sample_id", "task", "think_mode", "response_text"} lines.
std::vector<metrics::PredictionRecord> load_predictions(const std::filesystem::path& path);
std::vector<metrics::PredictionRecord> parse_predictions(std::istream& in);

/// Ground truth for scoring a record on a task. Throws std::invalid_argument
/// when the record lacks what the task needs.
rewards::GroundTruth ground_truth_for(const AnnotationRecord& record, TaskKind task);

/// Analysis fields rendered as "Label: text" lines.
std::string analysis_text(const Analysis& analysis);

}  // namespace vaur::dataset
