// Copyright 2026 The vaur Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <sstream>

#include "dataset.hpp"
#include "doctest.h"

using namespace vaur;
using namespace vaur::dataset;
using nlohmann::json;

namespace {

const std::filesystem::path kData = VAUR_TEST_DATA;

json base_record(const std::string& id) {
  return json{{"video_id", id},
              {"split", "train"},
              {"source", "msad"},
              {"judgement", "abnormal"},
              {"description", "two people fight near a car"},
              {"analysis",
               {{"specific_anomaly_type", "fighting"},
                {"location", "parking lot"},
                {"key_evidence", "punches"},
                {"detailed_explanation", "a dispute escalates"},
                {"cause_and_effect", "an argument leads to blows"},
                {"conclusion", "fighting"}}},
              {"qa",
               {{"question", "What happens?"},
                {"options", {{"A", "a fight"}, {"B", "a party"}, {"C", "a race"}, {"D", "nothing"}}},
                {"correct", "A"}}},
              {"temporal", {2.0, 8.0}},
              {"duration", 60.0},
              {"anomaly_class", "fighting"}};
}

LoadResult parse_lines(const std::vector<json>& lines) {
  std::stringstream ss;
  for (const auto& l : lines) ss << l.dump() << "\n";
  return parse_annotations(ss);
}

std::vector<ViolationCode> codes_of(const json& record) {
  const auto r = parse_lines({record});
  std::vector<ViolationCode> out;
  for (const auto& rej : r.rejections) {
    for (const auto& v : rej.violations) out.push_back(v.code);
  }
  return out;
}

bool rejects_with(const json& record, ViolationCode code) {
  const auto c = codes_of(record);
  return std::find(c.begin(), c.end(), code) != c.end();
}

metrics::PredictionRecord pred(std::string id, TaskKind task = TaskKind::MultiChoiceQA, bool think = false) {
  return {std::move(id), task, "<answer>A</answer>", think};
}

}  // namespace

TEST_CASE("three valid records") {
  const auto r = parse_lines({base_record("a"), base_record("b"), base_record("c")});
  CHECK(r.records.size() == 3);
  CHECK(r.rejections.empty());
  CHECK(r.records[1].video_id == "b");
  CHECK(r.records[0].temporal == std::optional<TimeInterval>(TimeInterval{2, 8}));
  REQUIRE(r.records[0].qa);
  CHECK(r.records[0].qa->options.size() == 4);
  CHECK(r.records[0].qa->correct == 'A');
  CHECK_FALSE(r.records[0].is_normal());
}

TEST_CASE("rejections name the violation") {
  auto out_of_bounds = base_record("x");
  out_of_bounds["temporal"] = {10, 130};
  out_of_bounds["duration"] = 100;
  CHECK(codes_of(out_of_bounds) == std::vector{ViolationCode::IntervalOutOfBounds});

  auto normal = base_record("n");
  normal["anomaly_class"] = "normal";
  CHECK(codes_of(normal) == std::vector{ViolationCode::NormalWithInterval});
  normal.erase("temporal");
  CHECK(codes_of(normal).empty());
  normal["temporal"] = nullptr;
  CHECK(codes_of(normal).empty());
}

TEST_CASE("every violation code has a rejecting record") {
  auto missing = base_record("m");
  missing.erase("description");
  CHECK(rejects_with(missing, ViolationCode::MissingField));
  auto missing_analysis = base_record("m");
  missing_analysis["analysis"].erase("conclusion");
  CHECK(rejects_with(missing_analysis, ViolationCode::MissingField));
  auto empty_id = base_record("");
  CHECK(rejects_with(empty_id, ViolationCode::MissingField));

  auto wrong = base_record("w");
  wrong["duration"] = "sixty";
  CHECK(rejects_with(wrong, ViolationCode::WrongType));
  auto wrong_temporal = base_record("w");
  wrong_temporal["temporal"] = {1, 2, 3};
  CHECK(rejects_with(wrong_temporal, ViolationCode::WrongType));

  auto split = base_record("s");
  split["split"] = "dev";
  CHECK(rejects_with(split, ViolationCode::InvalidSplit));

  auto reversed = base_record("r");
  reversed["temporal"] = {8, 2};
  CHECK(rejects_with(reversed, ViolationCode::InvalidInterval));
  auto negative = base_record("r");
  negative["temporal"] = {-1, 2};
  CHECK(rejects_with(negative, ViolationCode::InvalidInterval));

  auto duration = base_record("d");
  duration["duration"] = -3;
  CHECK(rejects_with(duration, ViolationCode::InvalidDuration));

  auto three = base_record("q");
  three["qa"]["options"].erase("D");
  CHECK(rejects_with(three, ViolationCode::QaOptionCount));

  auto label = base_record("q");
  label["qa"]["options"]["AB"] = "both";
  CHECK(rejects_with(label, ViolationCode::QaInvalidLabel));

  auto correct = base_record("q");
  correct["qa"]["correct"] = "E";
  CHECK(rejects_with(correct, ViolationCode::QaCorrectNotInOptions));

  auto cls = base_record("c");
  cls["anomaly_class"] = "dancing";
  CHECK(rejects_with(cls, ViolationCode::UnknownAnomalyClass));

  const auto dup = parse_lines({base_record("same"), base_record("same")});
  CHECK(dup.records.size() == 1);
  REQUIRE(dup.rejections.size() == 1);
  CHECK(dup.rejections[0].line == 2);
  CHECK(dup.rejections[0].violations[0].code == ViolationCode::DuplicateVideoId);
}

TEST_CASE("malformed JSON aborts the file") {
  std::stringstream ss("{\"video_id\": \"a\"\nnot json\n");
  CHECK_THROWS_AS(parse_annotations(ss), DatasetError);
  std::stringstream arr("[1, 2]\n");
  CHECK_THROWS_AS(parse_annotations(arr), DatasetError);
  CHECK_THROWS_AS(load_annotations(kData / "does_not_exist.jsonl"), DatasetError);
}

TEST_CASE("fixture files") {
  const auto clean = load_annotations(kData / "clean_annotations.jsonl");
  CHECK(clean.records.size() == 5);
  CHECK(clean.rejections.empty());

  const auto bad = load_annotations(kData / "bad_annotations.jsonl");
  REQUIRE(bad.rejections.size() == 1);
  CHECK(bad.rejections[0].video_id == "v03");
  CHECK(bad.rejections[0].violations[0].code == ViolationCode::IntervalOutOfBounds);
}

TEST_CASE("compute_stats") {
  CHECK(compute_stats({}).n_videos == 0);
  CHECK(compute_stats({}).total_duration_hours == 0.0);
  CHECK(compute_stats({}).mean_words_per_video == 0.0);
  for (const auto& [split, n] : compute_stats({}).split_counts) CHECK(n == 0);

  auto recs = parse_lines({base_record("a"), base_record("b")}).records;
  recs[0].duration = 60;
  recs[1].duration = 120;
  recs[1].split = Split::Test;
  recs[1].anomaly_class = "robbery";
  recs[1].temporal.reset();
  const auto s = compute_stats(recs);
  CHECK(s.n_videos == 2);
  CHECK(s.total_duration_hours == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(s.n_anomaly_types == 2);
  CHECK(s.n_temporal_annotations == 1);
  CHECK(s.split_counts.at(Split::Train) == 1);
  CHECK(s.split_counts.at(Split::Test) == 1);
  CHECK(s.mean_words_per_video > 0.0);

  const auto all = load_annotations(kData / "metrics_annotations.jsonl").records;
  const auto full = compute_stats(all);
  std::size_t split_sum = 0;
  for (const auto& [split, n] : full.split_counts) split_sum += n;
  CHECK(split_sum == full.n_videos);

  auto shuffled = all;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto again = compute_stats(shuffled);
  CHECK(again.n_videos == full.n_videos);
  CHECK(again.total_duration_hours == doctest::Approx(full.total_duration_hours));
  CHECK(again.n_anomaly_types == full.n_anomaly_types);
  CHECK(again.split_counts == full.split_counts);
  CHECK(again.n_temporal_annotations == full.n_temporal_annotations);
  CHECK(again.mean_words_per_video == doctest::Approx(full.mean_words_per_video));
}

TEST_CASE("serialize round trip") {
  const auto recs = load_annotations(kData / "metrics_annotations.jsonl").records;
  std::stringstream ss(serialize_annotations(recs));
  const auto back = parse_annotations(ss);
  CHECK(back.rejections.empty());
  CHECK(back.records == recs);
}

TEST_CASE("join_predictions") {
  std::vector<json> lines;
  for (const char* id : {"a", "b", "c", "d", "e"}) lines.push_back(base_record(id));
  const auto recs = parse_lines(lines).records;

  std::vector<metrics::PredictionRecord> five{pred("a"), pred("b"), pred("c"), pred("d"), pred("e")};
  const auto full = join_predictions(recs, five);
  CHECK(full.pairs.size() == 5);
  CHECK(full.unmatched_annotations.empty());
  CHECK(full.unmatched_predictions.empty());

  std::vector<metrics::PredictionRecord> four{pred("e"), pred("a"), pred("b"), pred("c")};
  const auto part = join_predictions(recs, four);
  CHECK(part.pairs.size() == 4);
  CHECK(part.pairs[0] == std::make_pair<std::size_t, std::size_t>(4, 0));
  CHECK(part.unmatched_annotations == std::vector<std::string>{"d"});

  std::vector<metrics::PredictionRecord> stray{pred("a"), pred("zz")};
  CHECK(join_predictions(recs, stray).unmatched_predictions == std::vector<std::string>{"zz"});

  std::vector<metrics::PredictionRecord> dup{pred("a"), pred("b"), pred("a")};
  CHECK_THROWS_AS(join_predictions(recs, dup), DuplicateIdError);

  // The same id across tasks and think modes is not a duplicate.
  std::vector<metrics::PredictionRecord> mixed{pred("a"), pred("a", TaskKind::MultiChoiceQA, true),
                                               pred("a", TaskKind::Classification)};
  CHECK(join_predictions(recs, mixed).pairs.size() == 3);
}

TEST_CASE("prediction files") {
  const auto preds = load_predictions(kData / "metrics_predictions.jsonl");
  CHECK(preds.size() == 70);
  CHECK(preds[0].sample_id == "v01");
  CHECK(preds[0].task == TaskKind::MultiChoiceQA);
  CHECK_FALSE(preds[0].think_mode);
  CHECK(preds[1].think_mode);

  std::stringstream bad_task("{\"sample_id\": \"a\", \"task\": \"dance\", \"think_mode\": false, \"response_text\": \"x\"}\n");
  CHECK_THROWS_AS(parse_predictions(bad_task), DatasetError);
  std::stringstream missing("{\"sample_id\": \"a\", \"task\": \"qa\"}\n");
  CHECK_THROWS_AS(parse_predictions(missing), DatasetError);
}

TEST_CASE("ground truth per task") {
  auto recs = parse_lines({base_record("a")}).records;
  const auto qa = ground_truth_for(recs[0], TaskKind::MultiChoiceQA);
  CHECK(qa.correct_answer == std::optional<std::string>("A"));
  CHECK(qa.options.size() == 4);
  const auto tag = ground_truth_for(recs[0], TaskKind::TemporalGrounding);
  CHECK(tag.anomaly_interval == std::optional<TimeInterval>(TimeInterval{2, 8}));
  CHECK_FALSE(tag.is_normal);
  const auto cls = ground_truth_for(recs[0], TaskKind::Classification);
  CHECK(cls.correct_answer == std::optional<std::string>("fighting"));

  recs[0].qa.reset();
  CHECK_THROWS_AS(ground_truth_for(recs[0], TaskKind::MultiChoiceQA), std::invalid_argument);
}

TEST_CASE("taxonomy") {
  const auto builtin = Taxonomy::builtin();
  CHECK(builtin.labels().size() == 19);
  CHECK(builtin.contains("Fighting"));
  CHECK(builtin.contains("road  accident"));
  CHECK(builtin.contains("normal"));
  CHECK_FALSE(builtin.contains("dancing"));

  const auto file = Taxonomy::load(std::filesystem::path(VAUR_CONFIG_DIR) / "taxonomy.json");
  CHECK(file.labels() == builtin.labels());
  CHECK_THROWS_AS(Taxonomy::load(kData / "missing_taxonomy.json"), DatasetError);

  const Taxonomy custom({"dancing"});
  auto rec = base_record("t");
  rec["anomaly_class"] = "dancing";
  std::stringstream ss(rec.dump() + "\n");
  CHECK(parse_annotations(ss, custom).records.size() == 1);
}

TEST_CASE("analysis text lists every field") {
  const auto recs = parse_lines({base_record("a")}).records;
  const auto text = analysis_text(recs[0].analysis);
  for (const char* part : {"fighting", "parking lot", "punches", "a dispute escalates", "an argument leads to blows"}) {
    CHECK(text.find(part) != std::string::npos);
  }
}
