/* Copyright 2026 The hatkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hatkit/bench.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "hatkit/error.h"
#include "hatkit/memory.h"

namespace hatkit {
namespace {

HatConfig tiny_hat(std::string_view layout = "I1") {
  HatConfig c;
  c.hidden = 16;
  c.heads = 2;
  c.ffn = 32;
  c.vocab = 50;
  c.K = 8;
  c.n_max = 4;
  c.layout = layout_by_name(layout);
  return c;
}

FlatConfig tiny_flat() {
  FlatConfig c;
  c.hidden = 16;
  c.heads = 2;
  c.ffn = 32;
  c.vocab = 50;
  c.max_positions = 32;
  c.layers = 6;
  return c;
}

BenchConfig quick_config() {
  BenchConfig c;
  c.batch_size = 2;
  c.N = 4;
  c.K = 8;
  c.steps = 4;
  c.choices = 3;
  return c;
}

std::vector<BenchModel> tiny_models() {
  return {BenchModel::hat_model("hat", tiny_hat()),
          BenchModel::window_model("window", tiny_flat(), WindowConfig{8, true}),
          BenchModel::dense_model("dense", tiny_flat())};
}

BenchReport fixture(std::string id, double seconds_per_batch, double peak_gb) {
  BenchReport r;
  r.model_id = std::move(id);
  r.batches_per_second = 1.0 / seconds_per_batch;
  r.peak_memory_bytes = static_cast<std::size_t>(peak_gb * 1e9);
  r.score_count = 1000;
  r.repetitions = 3;
  return r;
}

TEST(Compare, ReproducesPublishedTimeSaving) {
  const Comparison c = compare({fixture("LF", 0.266, 17.3), fixture("HAT", 0.162, 15.5)});
  EXPECT_EQ(c.reference, "LF");
  EXPECT_EQ(c.rows[1].time_saving, 39);
  EXPECT_EQ(c.rows[1].memory_saving, 10);
  EXPECT_EQ(c.rows[0].time_saving, 0);
  EXPECT_EQ(c.rows[0].memory_saving, 0);
}

TEST(Compare, PercentSavingClosedForm) {
  EXPECT_EQ(percent_saving(0.162, 0.266), 39);
  EXPECT_EQ(percent_saving(15.5, 17.3), 10);
  EXPECT_EQ(percent_saving(1.0, 1.0), 0);
  EXPECT_EQ(percent_saving(2.0, 1.0), -100);
  EXPECT_THROW(percent_saving(1.0, 0.0), ContractError);
}

TEST(Compare, IdenticalReportsGiveZero) {
  const Comparison c = compare({fixture("a", 0.5, 2.0), fixture("b", 0.5, 2.0), fixture("c", 0.5, 2.0)}, 1);
  for (const ComparisonRow& r : c.rows) {
    EXPECT_EQ(r.time_saving, 0);
    EXPECT_EQ(r.memory_saving, 0);
    EXPECT_EQ(r.score_saving, 0);
  }
}

TEST(Compare, RejectsMixedTaskOrPhase) {
  BenchReport a = fixture("a", 0.5, 1.0), b = fixture("b", 0.4, 1.0);
  b.phase = BenchPhase::kInfer;
  EXPECT_THROW(compare({a, b}), ContractError);
  b.phase = BenchPhase::kTrain;
  b.task = BenchTask::kMcqa;
  EXPECT_THROW(compare({a, b}), ContractError);
  EXPECT_THROW(compare({a}), ContractError);
  EXPECT_THROW(compare({a, a}, 2), ContractError);
}

TEST(Compare, FailedReferenceIsAnError) {
  BenchReport a = fixture("a", 0.5, 1.0);
  a.ok = false;
  EXPECT_THROW(compare({a, fixture("b", 0.4, 1.0)}), ContractError);
  const Comparison c = compare({fixture("b", 0.4, 1.0), a});
  EXPECT_FALSE(c.rows[1].ok);
}

TEST(Compare, RenderShowsSignedPercentages) {
  const std::string table = render_comparison(compare({fixture("LF", 0.266, 17.3), fixture("HAT", 0.162, 15.5)}));
  EXPECT_NE(table.find("(+39%)"), std::string::npos) << table;
  EXPECT_NE(table.find("(+10%)"), std::string::npos) << table;
  EXPECT_NE(table.find("0.1620"), std::string::npos) << table;
}

TEST(Measure, AnalyticCountMatchesKernelsForEveryModelAndTask) {
  for (const BenchModel& model : tiny_models()) {
    for (BenchTask task : {BenchTask::kMlm, BenchTask::kDocCls, BenchTask::kSegCls, BenchTask::kMcqa}) {
      const BenchReport r = measure(model, task, BenchPhase::kInfer, quick_config());
      ASSERT_TRUE(r.ok) << r.failure;
      EXPECT_EQ(r.score_count, r.measured_score_count) << model.id << " " << bench_task_name(task);
      EXPECT_GT(r.score_count, 0u);
    }
  }
}

TEST(Measure, BestOfRepetitions) {
  const BenchReport r = measure(tiny_models()[0], BenchTask::kMlm, BenchPhase::kTrain, quick_config());
  ASSERT_TRUE(r.ok);
  ASSERT_EQ(r.run_batches_per_second.size(), 3u);
  ASSERT_EQ(r.run_peak_memory_bytes.size(), 3u);
  EXPECT_EQ(r.batches_per_second, *std::max_element(r.run_batches_per_second.begin(), r.run_batches_per_second.end()));
  EXPECT_EQ(r.peak_memory_bytes, *std::min_element(r.run_peak_memory_bytes.begin(), r.run_peak_memory_bytes.end()));
  EXPECT_GT(r.peak_memory_bytes, 0u);
  EXPECT_EQ(r.repetitions, 3u);
  EXPECT_EQ(r.steps, 4u);
  EXPECT_EQ(r.config.at("task"), "MLM");
}

TEST(Measure, RepeatedRunsShareScoreCount) {
  const BenchModel model = tiny_models()[1];
  const BenchReport a = measure(model, BenchTask::kDocCls, BenchPhase::kTrain, quick_config());
  const BenchReport b = measure(model, BenchTask::kDocCls, BenchPhase::kTrain, quick_config());
  EXPECT_EQ(a.score_count, b.score_count);
  EXPECT_EQ(a.measured_score_count, b.measured_score_count);
}

TEST(Measure, InferenceIsFasterThanTraining) {
  BenchConfig cfg = quick_config();
  cfg.steps = 20;
  for (const BenchModel& model : tiny_models()) {
    const BenchReport train = measure(model, BenchTask::kMlm, BenchPhase::kTrain, cfg);
    const BenchReport infer = measure(model, BenchTask::kMlm, BenchPhase::kInfer, cfg);
    EXPECT_GE(infer.batches_per_second, train.batches_per_second) << model.id;
    EXPECT_LE(infer.peak_memory_bytes, train.peak_memory_bytes) << model.id;
  }
}

TEST(Measure, OutOfMemoryIsAStructuredFailure) {
  BenchConfig cfg = quick_config();
  cfg.memory_limit_bytes = 4096;
  BenchReport r;
  ASSERT_NO_THROW(r = measure(tiny_models()[0], BenchTask::kMlm, BenchPhase::kTrain, cfg));
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.failure.find("out of memory"), std::string::npos);
  EXPECT_EQ(MemoryTracker::limit(), 0u);
  EXPECT_EQ(r.score_count, bench_score_count(tiny_models()[0], BenchTask::kMlm, cfg));
}

TEST(Measure, ConfigValidation) {
  BenchConfig cfg = quick_config();
  cfg.repetitions = 2;
  EXPECT_THROW(measure(tiny_models()[0], BenchTask::kMlm, BenchPhase::kTrain, cfg), ConfigError);
  cfg = quick_config();
  cfg.warmup_steps = 4;
  EXPECT_THROW(measure(tiny_models()[0], BenchTask::kMlm, BenchPhase::kTrain, cfg), ConfigError);
  cfg = quick_config();
  cfg.N = 5;  // beyond n_max
  EXPECT_THROW(measure(tiny_models()[0], BenchTask::kMlm, BenchPhase::kTrain, cfg), ConfigError);
  cfg = quick_config();
  cfg.N = 8;  // T = 64 beyond 32 positions
  EXPECT_THROW(measure(tiny_models()[2], BenchTask::kMlm, BenchPhase::kTrain, cfg), ConfigError);
}

TEST(ScoreCount, DoublingSegmentsApproachesTwice) {
  HatConfig hat = tiny_hat();
  hat.K = 128;
  hat.n_max = 32;
  BenchConfig cfg;
  cfg.K = 128;
  cfg.N = 16;
  const BenchModel model = BenchModel::hat_model("hat", hat);
  const double s16 = double(bench_score_count(model, BenchTask::kMlm, cfg));
  cfg.N = 32;
  const double s32 = double(bench_score_count(model, BenchTask::kMlm, cfg));
  EXPECT_GT(s32, s16);
  EXPECT_NEAR(s32 / s16, 2.0, 0.1);
}

TEST(ScoreCount, HatBelowWindowAtLongLength) {
  HatConfig hat = tiny_hat();
  hat.K = 128;
  hat.n_max = 32;
  FlatConfig flat = tiny_flat();
  flat.max_positions = 4096;
  BenchConfig cfg;
  cfg.K = 128;
  cfg.N = 32;
  EXPECT_LT(bench_score_count(BenchModel::hat_model("hat", hat), BenchTask::kMlm, cfg),
            bench_score_count(BenchModel::window_model("lf", flat, WindowConfig{128, true}), BenchTask::kMlm, cfg));
}

TEST(Reports, CsvRoundTrip) {
  std::vector<BenchReport> reports = {fixture("LF", 0.266, 17.3), fixture("HAT", 0.162, 15.5)};
  reports[1].ok = false;
  reports[1].failure = "out of memory, twice";
  reports[0].measured_score_count = 1000;
  const std::string csv = reports_to_csv(reports);
  const std::vector<BenchReport> back = reports_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].batches_per_second, reports[0].batches_per_second);
  EXPECT_EQ(back[0].peak_memory_bytes, reports[0].peak_memory_bytes);
  EXPECT_EQ(back[0].measured_score_count, 1000u);
  EXPECT_FALSE(back[1].ok);
  EXPECT_EQ(back[1].failure, "out of memory; twice");
  EXPECT_EQ(reports_to_csv(back), reports_to_csv(reports_from_csv(reports_to_csv(back))));
  EXPECT_THROW(reports_from_csv("nope\n"), ConfigError);
  EXPECT_THROW(reports_from_csv(csv.substr(0, csv.find('\n') + 1) + "a,MLM,train,1\n"), ConfigError);
}

TEST(Reports, JsonRoundTrip) {
  const BenchReport r = measure(tiny_models()[1], BenchTask::kSegCls, BenchPhase::kInfer, quick_config());
  const BenchReport back = bench_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back), to_json(r));
  EXPECT_THROW(bench_report_from_json(nlohmann::json::object()), ConfigError);
}

}  // namespace
}  // namespace hatkit
