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

#ifndef HATKIT_BENCH_H_
#define HATKIT_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/baseline_models.h"
#include "hatkit/hat_model.h"
#include "json.hpp"

namespace hatkit {

enum class BenchModelKind { kHat, kWindow, kDense };
enum class BenchTask { kMlm, kDocCls, kSegCls, kMcqa };
enum class BenchPhase { kTrain, kInfer };

BenchTask parse_bench_task(std::string_view name);
std::string_view bench_task_name(BenchTask task);
BenchPhase parse_bench_phase(std::string_view name);
std::string_view bench_phase_name(BenchPhase phase);

struct BenchModel {
  std::string id;
  BenchModelKind kind = BenchModelKind::kHat;
  HatConfig hat;
  // Flat encoders (window and dense).
  FlatConfig flat;
  WindowConfig window;

  static BenchModel hat_model(std::string id, HatConfig config);
  static BenchModel window_model(std::string id, FlatConfig config, WindowConfig window);
  static BenchModel dense_model(std::string id, FlatConfig config);
};

struct BenchConfig {
  std::size_t batch_size = 1;
  // Every document holds N full segments of K tokens (T = N * K flat).
  std::size_t N = 8;
  std::size_t K = 128;
  std::size_t repetitions = 3;
  std::size_t warmup_steps = 5;
  std::size_t steps = 100;
  std::size_t choices = 5;
  std::size_t labels = 2;
  double mlm_rate = 0.15;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  // Peak tracked tensor bytes above this count as out of memory; 0 = none.
  std::size_t memory_limit_bytes = 0;

  void validate() const;
};

struct BenchReport {
  std::string model_id;
  BenchTask task = BenchTask::kMlm;
  BenchPhase phase = BenchPhase::kTrain;
  bool ok = true;
  std::string failure;
  // Best over repetitions: highest throughput, lowest peak.
  double batches_per_second = 0.0;
  std::size_t peak_memory_bytes = 0;
  // Attention logits of one step from the cost model, and as counted by the
  // attention kernels during a recorded step.
  std::uint64_t score_count = 0;
  std::uint64_t measured_score_count = 0;
  std::size_t repetitions = 0;
  std::size_t warmup_steps = 0;
  std::size_t steps = 0;
  std::string policy = "best-of-n";
  std::vector<double> run_batches_per_second;
  std::vector<std::size_t> run_peak_memory_bytes;
  nlohmann::json config;

  double seconds_per_batch() const { return batches_per_second > 0 ? 1.0 / batches_per_second : 0.0; }
};

// Analytic attention logits of one step over the benchmark inputs.
std::uint64_t bench_score_count(const BenchModel& model, BenchTask task, const BenchConfig& config);

// Runs `repetitions` rounds of warmup_steps discarded steps followed by
// `steps` timed ones on a fixed synthetic batch. Memory exhaustion yields a
// report with ok = false instead of an exception.
BenchReport measure(const BenchModel& model, BenchTask task, BenchPhase phase, const BenchConfig& config);

// Percentage by which x improves on ref for a lower-is-better quantity,
// rounded to an integer: round(100 * (ref - x) / ref).
long percent_saving(double x, double ref);

struct ComparisonRow {
  std::string model_id;
  bool reference = false;
  bool ok = true;
  double seconds_per_batch = 0.0;
  long time_saving = 0;
  std::size_t peak_memory_bytes = 0;
  long memory_saving = 0;
  std::uint64_t score_count = 0;
  long score_saving = 0;
};

struct Comparison {
  std::string reference;
  BenchTask task = BenchTask::kMlm;
  BenchPhase phase = BenchPhase::kTrain;
  std::vector<ComparisonRow> rows;
};

// Percentages against reports[reference_index]; positive = better than the
// reference (less time per batch, less memory, fewer scores). Needs at least
// two reports of one task and phase (ContractError otherwise).
Comparison compare(const std::vector<BenchReport>& reports, std::size_t reference_index = 0);
// Aligned text table.
std::string render_comparison(const Comparison& comparison);

nlohmann::json to_json(const BenchReport& report);
BenchReport bench_report_from_json(const nlohmann::json& doc);
std::string reports_to_csv(const std::vector<BenchReport>& reports);
std::vector<BenchReport> reports_from_csv(std::string_view text);

}  // namespace hatkit

#endif  // HATKIT_BENCH_H_
