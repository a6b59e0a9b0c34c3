// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

// Evaluation protocol: QA accuracy split by think mode, grounding mIoU and
// recall at IoU thresholds, binary and multi-class classification accuracy,
// and aggregation of five-dimension judge scores.

#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "prediction.hpp"
#include "rewards.hpp"
#include "tagparse.hpp"

namespace vaur::metrics {

/// A prediction whose sample_id has no annotation.
class UnjoinableError : public std::runtime_error {
 public:
  explicit UnjoinableError(const std::string& id)
      : std::runtime_error("prediction '" + id + "' has no matching annotation") {}
};

using AnnotationIndex = std::map<std::string, const dataset::AnnotationRecord*, std::less<>>;

AnnotationIndex index_annotations(std::span<const dataset::AnnotationRecord> records);

/// Evaluation reads responses leniently: the answer is the answer segment when
/// exactly one well-formed pair exists, otherwise the whole text. Glue is taken
/// only from a single well-formed, parseable pair.
tags::StructuredResponse evaluation_view(std::string_view raw, TaskKind task);

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;

  std::optional<double> value() const;
};

struct QaAccuracy {
  Accuracy with_think;
  Accuracy without_think;
};

bool qa_correct(const PredictionRecord& prediction, const dataset::AnnotationRecord& record);

/// Throws UnjoinableError, or std::invalid_argument when a record has no QA pair.
QaAccuracy qa_accuracy(std::span<const PredictionRecord> predictions, const AnnotationIndex& annotations);

inline constexpr std::array<double, 3> kRecallThresholds{0.3, 0.5, 0.7};

struct RecallAt {
  double threshold = 0.0;
  std::optional<double> value;  // absent for an empty denominator
};

struct GroundingScore {
  /// Mean per-sample IoU over every sample; a correctly declared normal
  /// video counts as 1.
  double miou = 0.0;
  /// Fraction of anomalous samples with IoU >= threshold.
  std::vector<RecallAt> recall_at;
  std::size_t n_samples = 0;
  std::size_t n_anomalous = 0;

  // Same quantities with the other denominator, for transparency.
  std::optional<double> miou_anomalous;
  std::vector<RecallAt> recall_at_all;

  std::vector<double> per_sample_iou;
};

double sample_iou(const PredictionRecord& prediction, const dataset::AnnotationRecord& record,
                  const rewards::RewardConfig& config = {});

GroundingScore summarize_grounding(std::span<const double> ious, const std::vector<bool>& anomalous);

GroundingScore grounding_score(std::span<const PredictionRecord> predictions,
                               const AnnotationIndex& annotations,
                               const rewards::RewardConfig& config = {});

struct ClassificationAccuracy {
  Accuracy binary;
  Accuracy multi;
};

/// Labels outside the taxonomy count as wrong in both accuracies.
ClassificationAccuracy classification_accuracy(std::span<const PredictionRecord> predictions,
                                               const AnnotationIndex& annotations,
                                               const dataset::Taxonomy& taxonomy = dataset::Taxonomy::builtin());

struct VauEvalScore {
  double cls = 0.0;
  double km = 0.0;
  double flu = 0.0;
  double inf = 0.0;
  double fac = 0.0;
  double total = 0.0;

  /// Builds a score with total = cls + km + flu + inf + fac.
  static VauEvalScore from_dimensions(double cls, double km, double flu, double inf, double fac);
  bool in_range() const;
  bool operator==(const VauEvalScore&) const = default;
};

/// Dimension-wise mean with the total recomputed from the means. Throws
/// std::invalid_argument on an empty list or a dimension outside [0, 10].
VauEvalScore aggregate_vau_eval(std::span<const VauEvalScore> per_sample);

/// Two decimals, halves rounded up.
std::string format_fixed2(double value);
/// fraction * 100 with two decimals.
std::string format_percent(double fraction);

}  // namespace vaur::metrics
