// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include "metrics.hpp"

#include <cmath>
#include <cstdio>

namespace vaur::metrics {

AnnotationIndex index_annotations(std::span<const dataset::AnnotationRecord> records) {
  AnnotationIndex index;
  for (const auto& r : records) index.emplace(r.video_id, &r);
  return index;
}

tags::StructuredResponse evaluation_view(std::string_view raw, TaskKind task) {
  const auto parsed = tags::parse_response(raw, task, {.require_think = false});
  if (parsed.response) return *parsed.response;
  tags::StructuredResponse view;
  view.answer = std::string(trim(raw));
  view.glue = tags::extract_glue(raw);
  view.raw = std::string(raw);
  return view;
}

std::optional<double> Accuracy::value() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

const dataset::AnnotationRecord& lookup(const AnnotationIndex& annotations, const PredictionRecord& p) {
  auto it = annotations.find(p.sample_id);
  if (it == annotations.end()) throw UnjoinableError(p.sample_id);
  return *it->second;
}

bool at_least(double value, double threshold) { return value + 1e-12 >= threshold; }

}  // namespace

bool qa_correct(const PredictionRecord& prediction, const dataset::AnnotationRecord& record) {
  const auto truth = dataset::ground_truth_for(record, TaskKind::MultiChoiceQA);
  const auto view = evaluation_view(prediction.raw_response, TaskKind::MultiChoiceQA);
  return rewards::accuracy_reward(&view, truth) == 1.0;
}

QaAccuracy qa_accuracy(std::span<const PredictionRecord> predictions, const AnnotationIndex& annotations) {
  QaAccuracy out;
  for (const auto& p : predictions) {
    const auto& record = lookup(annotations, p);
    Accuracy& bucket = p.think_mode ? out.with_think : out.without_think;
    ++bucket.total;
    if (qa_correct(p, record)) ++bucket.correct;
  }
  return out;
}

double sample_iou(const PredictionRecord& prediction, const dataset::AnnotationRecord& record,
                  const rewards::RewardConfig& config) {
  const auto truth = dataset::ground_truth_for(record, TaskKind::TemporalGrounding);
  const auto view = evaluation_view(prediction.raw_response, TaskKind::TemporalGrounding);
  return rewards::tiou_reward(&view, truth, config);
}

GroundingScore summarize_grounding(std::span<const double> ious, const std::vector<bool>& anomalous) {
  if (ious.size() != anomalous.size()) {
    throw std::invalid_argument("summarize_grounding: one anomalous flag per sample is required");
  }
  GroundingScore score;
  score.n_samples = ious.size();
  score.per_sample_iou.assign(ious.begin(), ious.end());

  double sum = 0.0;
  double sum_anomalous = 0.0;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    sum += ious[i];
    if (anomalous[i]) {
      ++score.n_anomalous;
      sum_anomalous += ious[i];
    }
  }
  if (score.n_samples > 0) score.miou = sum / static_cast<double>(score.n_samples);
  if (score.n_anomalous > 0) score.miou_anomalous = sum_anomalous / static_cast<double>(score.n_anomalous);

  for (double t : kRecallThresholds) {
    std::size_t hit = 0;
    std::size_t hit_anomalous = 0;
    for (std::size_t i = 0; i < ious.size(); ++i) {
      if (!at_least(ious[i], t)) continue;
      ++hit;
      if (anomalous[i]) ++hit_anomalous;
    }
    RecallAt r{t, std::nullopt};
    if (score.n_anomalous > 0) {
      r.value = static_cast<double>(hit_anomalous) / static_cast<double>(score.n_anomalous);
    }
    score.recall_at.push_back(r);
    RecallAt all{t, std::nullopt};
    if (score.n_samples > 0) all.value = static_cast<double>(hit) / static_cast<double>(score.n_samples);
    score.recall_at_all.push_back(all);
  }
  return score;
}

GroundingScore grounding_score(std::span<const PredictionRecord> predictions,
                               const AnnotationIndex& annotations, const rewards::RewardConfig& config) {
  std::vector<double> ious;
  std::vector<bool> anomalous;
  for (const auto& p : predictions) {
    const auto& record = lookup(annotations, p);
    ious.push_back(sample_iou(p, record, config));
    anomalous.push_back(!record.is_normal());
  }
  return summarize_grounding(ious, anomalous);
}

ClassificationAccuracy classification_accuracy(std::span<const PredictionRecord> predictions,
                                               const AnnotationIndex& annotations,
                                               const dataset::Taxonomy& taxonomy) {
  ClassificationAccuracy out;
  for (const auto& p : predictions) {
    const auto& record = lookup(annotations, p);
    const auto view = evaluation_view(p.raw_response, TaskKind::Classification);
    const auto predicted = normalize_label(view.answer);
    const auto truth = normalize_label(record.anomaly_class);
    ++out.binary.total;
    ++out.multi.total;
    if (!taxonomy.contains(predicted)) continue;
    const bool predicted_normal = predicted == "normal";
    if (predicted_normal == record.is_normal()) ++out.binary.correct;
    if (predicted == truth) ++out.multi.correct;
  }
  return out;
}

VauEvalScore VauEvalScore::from_dimensions(double cls, double km, double flu, double inf, double fac) {
  return {cls, km, flu, inf, fac, cls + km + flu + inf + fac};
}

bool VauEvalScore::in_range() const {
  for (double v : {cls, km, flu, inf, fac}) {
    if (!(v >= 0.0 && v <= 10.0)) return false;
  }
  return true;
}

VauEvalScore aggregate_vau_eval(std::span<const VauEvalScore> per_sample) {
  if (per_sample.empty()) throw std::invalid_argument("aggregate_vau_eval: no scores");
  double cls = 0.0, km = 0.0, flu = 0.0, inf = 0.0, fac = 0.0;
  for (const auto& s : per_sample) {
    if (!s.in_range()) throw std::invalid_argument("aggregate_vau_eval: dimension outside [0, 10]");
    cls += s.cls;
    km += s.km;
    flu += s.flu;
    inf += s.inf;
    fac += s.fac;
  }
  const double n = static_cast<double>(per_sample.size());
  return VauEvalScore::from_dimensions(cls / n, km / n, flu / n, inf / n, fac / n);
}

std::string format_fixed2(double value) {
  const double rounded = std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  return buf;
}

std::string format_percent(double fraction) { return format_fixed2(fraction * 100.0); }

}  // namespace vaur::metrics
