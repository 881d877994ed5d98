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

#ifndef HATKIT_TASKS_H_
#define HATKIT_TASKS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/baseline_models.h"
#include "hatkit/graph.h"
#include "hatkit/hat_model.h"
#include "hatkit/param_store.h"
#include "hatkit/random.h"
#include "hatkit/segmenter.h"

namespace hatkit {

enum class TaskKind { kMlm, kSmlm40, kSmlm100, kSop, kMcMsp, kDtc };

TaskKind parse_task(std::string_view name);
std::string_view task_name(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::kMlm;
  double mlm_rate = 0.15;
  double segment_rate = 0.2;
  std::size_t choices = 5;
  // Class count for DTC.
  std::size_t labels = 2;
  // SOP regression loss: L1 by default, squared error when set.
  bool sop_mse = false;

  // Fraction of tokens masked inside a chosen segment (SMLM variants).
  double token_rate() const;
  // Throws ConfigError on out-of-range rates or counts.
  void validate() const;
};

// One training instance. MC-MSP carries one input per choice, every other
// task exactly one.
struct TaskExample {
  std::vector<SegmentedDocument> inputs;
  // MLM/SMLM: original id at every masked grid position of inputs[0],
  // kIgnoreIndex elsewhere.
  std::vector<std::int32_t> token_targets;
  // SOP: original index of the segment displayed at each slot divided by
  // scale = (valid segments - 1); mask marks valid slots.
  std::vector<float> order_targets;
  std::vector<std::uint8_t> order_mask;
  float order_scale = 1.0f;
  // DTC: class id. MC-MSP: index of the true choice.
  std::int32_t label = -1;
};

// Every builder returns nullopt when the document cannot produce the task
// (no eligible tokens, too few segments, too few distractors).
std::optional<TaskExample> build_mlm(const SegmentedDocument& doc, double rate, std::size_t vocab,
                                     Rng& rng);
std::optional<TaskExample> build_smlm(const SegmentedDocument& doc, double segment_rate,
                                      double token_rate, Rng& rng);
std::optional<TaskExample> build_sop(const SegmentedDocument& doc, Rng& rng);

// Segment payloads of a corpus, bucketed by length, used as MC-MSP
// distractors. A candidate is compatible with a target of length n when its
// length is within max(1, n/4) of n and it comes from another document.
class SegmentPool {
 public:
  SegmentPool() = default;
  explicit SegmentPool(std::span<const SegmentedDocument> docs);

  void add(std::size_t doc_id, std::vector<std::int32_t> payload);
  std::vector<std::size_t> compatible(std::size_t length, std::size_t exclude_doc) const;
  const std::vector<std::int32_t>& payload(std::size_t index) const { return entries_[index].payload; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::size_t doc_id;
    std::vector<std::int32_t> payload;
  };
  std::vector<Entry> entries_;
  std::map<std::size_t, std::vector<std::size_t>> by_length_;
};

// One segment is replaced by [MASK]s (its [CLS] kept); each choice input is
// the masked document with a candidate segment appended as its last
// segment. The document keeps at most n_max - 1 segments.
std::optional<TaskExample> build_mcmsp(const SegmentedDocument& doc, std::size_t doc_id,
                                       const SegmentPool& pool, std::size_t choices,
                                       std::size_t n_max, Rng& rng);
// Throws ContractError unless 0 <= label < labels.
TaskExample build_dtc(const SegmentedDocument& doc, int label, std::size_t labels);

std::optional<TaskExample> build_example(const TaskSpec& spec, const SegmentedDocument& doc,
                                         std::size_t doc_id, const SegmentPool& pool,
                                         std::size_t vocab, std::size_t n_max, Rng& rng);

// Every valid segment of every document as a one-segment document (the
// unit a flat source model is pre-trained on before warm-starting).
std::vector<SegmentedDocument> single_segment_documents(std::span<const SegmentedDocument> docs);

struct TaskBatch {
  TaskKind kind = TaskKind::kMlm;
  std::size_t examples = 0;
  std::size_t choices = 1;
  HatBatch inputs;
  std::vector<std::int32_t> token_targets;
  // Per segment row of `inputs`.
  std::vector<float> order_targets;
  std::vector<std::uint8_t> order_mask;
  std::vector<float> order_scale;
  // Per example.
  std::vector<std::int32_t> labels;
};

// Pads every input to the longest one. Throws EmptyBatchError on no input.
TaskBatch collate(TaskKind kind, std::span<const TaskExample> examples);

struct Metrics {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double micro_f1 = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

double accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> gold);
// Pooled true/false positives and false negatives over all classes.
double micro_f1(std::span<const std::int32_t> predicted, std::span<const std::int32_t> gold);

class MetricAccumulator {
 public:
  void add_loss(double mean, std::size_t count);
  void add_abs_error(double sum, std::size_t count);
  void add_prediction(std::int32_t predicted, std::int32_t gold);
  void merge(const MetricAccumulator& other);
  Metrics result() const;

 private:
  double loss_sum_ = 0.0;
  std::size_t loss_count_ = 0;
  double abs_sum_ = 0.0;
  std::size_t abs_count_ = 0;
  std::vector<std::int32_t> predicted_;
  std::vector<std::int32_t> gold_;
};

// The metric early stopping watches: loss for MLM/SMLM, MAE for SOP,
// accuracy for MC-MSP and micro-F1 for DTC.
double primary_metric(TaskKind kind, const Metrics& m);
bool higher_is_better(TaskKind kind);
std::string_view primary_metric_name(TaskKind kind);

struct StepOutput {
  Var loss;
  MetricAccumulator stats;
};
using TaskModel = std::function<StepOutput(Graph&, const ParamStore&, const TaskBatch&)>;

// Head tensors for the task: "sop" (L = 1), "mcmsp" (L = 1), "dtc" (L =
// labels). MLM variants use the encoder's MLM head.
void add_task_head(ParamStore& params, const TaskSpec& spec, std::size_t hidden, Rng& rng);
TaskModel hat_task_model(const HatConfig& config, const TaskSpec& spec);
// MLM over the flat baseline; each document is flattened with
// FlatBatch::from_grid.
TaskModel flat_mlm_model(const FlatConfig& config, FlatAttention attention = {});

}  // namespace hatkit

#endif  // HATKIT_TASKS_H_
