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

#ifndef HATKIT_TRAINER_H_
#define HATKIT_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hatkit/param_store.h"
#include "hatkit/segmenter.h"
#include "hatkit/tasks.h"

namespace hatkit {

struct TrainConfig {
  double lr = 1e-4;
  // Fraction of steps spent in linear warm-up.
  double warmup = 0.05;
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  // Evaluations without dev improvement before stopping (0 = never).
  std::size_t patience = 0;
  std::size_t eval_every = 100;
  std::size_t eval_batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Global gradient-norm clipping threshold (0 = off).
  double clip_norm = 1.0;

  // Throws ConfigError.
  void validate() const;
};

// Linear warm-up from 0 to lr over round(warmup * steps) steps, then linear
// decay to 0 at `steps`.
double learning_rate(const TrainConfig& config, std::size_t step);

// Adam with decoupled weight decay. Decay applies to tensors of rank >= 2
// (weight matrices and embedding tables), not to biases and gains.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& config);
  // Consumes the gradient slots of trainable entries.
  void step(ParamStore& params, double lr);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

// Scales every gradient slot so the global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(ParamStore& params, double max_norm);

struct TraceRow {
  std::size_t step = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
};

// Header "step,split,metric,value"; values printed with 17 significant
// digits so the text is a bitwise record of the run.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

struct TrainResult {
  // Parameters at the best dev evaluation.
  ParamStore params;
  std::vector<TraceRow> trace;
  Metrics initial_dev;
  Metrics best_dev;
  Metrics final_dev;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
  bool stopped_early = false;
};

// Mini-batch training. The epoch order and every example's corruption are
// drawn from generators seeded by (seed, epoch, document index), so results
// depend only on the inputs and the seed. Dev examples are built once. The
// dev set is evaluated at step 0, every eval_every steps and at the end.
// Throws DivergenceError when a training loss is not finite.
TrainResult train(ParamStore params, const TaskModel& model, const TaskSpec& spec,
                  const std::vector<SegmentedDocument>& train_docs,
                  const std::vector<SegmentedDocument>& dev_docs, std::size_t vocab,
                  std::size_t n_max, const TrainConfig& config,
                  const std::function<void(const TraceRow&)>& on_row = {});

// Metrics of `model` over prebuilt examples.
Metrics evaluate(const ParamStore& params, const TaskModel& model, const TaskSpec& spec,
                 const std::vector<TaskExample>& examples, std::size_t batch_size);

// Deterministic dev examples for a corpus (skipping documents that cannot
// produce the task).
std::vector<TaskExample> build_examples(const TaskSpec& spec, const std::vector<SegmentedDocument>& docs,
                                        const SegmentPool& pool, std::size_t vocab, std::size_t n_max,
                                        std::uint64_t seed, std::size_t doc_id_offset = 0);

}  // namespace hatkit

#endif  // HATKIT_TRAINER_H_
