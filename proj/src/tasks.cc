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

#include "hatkit/tasks.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hatkit/error.h"
#include "hatkit/heads.h"
#include "hatkit/ops.h"

namespace hatkit {
namespace {

// First k entries of a uniformly shuffled copy of items.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> items, std::size_t k, Rng& rng) {
  k = std::min(k, items.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(items[i], items[i + uniform_index(rng, items.size() - i)]);
  items.resize(k);
  return items;
}

void shuffle(std::vector<std::size_t>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

std::size_t valid_segments(const SegmentedDocument& doc) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < doc.N; ++i) n += doc.valid[i * doc.K] ? 1 : 0;
  return n;
}

// Mask-eligible grid positions: valid and not the segment's [CLS].
std::vector<std::size_t> eligible_positions(const SegmentedDocument& doc, std::size_t segment) {
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j < doc.K; ++j) {
    const std::size_t p = segment * doc.K + j;
    if (doc.valid[p] && !SpecialTokens::is_special(doc.ids[p])) out.push_back(p);
  }
  return out;
}

std::vector<std::int32_t> payload_of(const SegmentedDocument& doc, std::size_t segment) {
  std::vector<std::int32_t> out;
  for (std::size_t j = 1; j < doc.K; ++j) {
    const std::size_t p = segment * doc.K + j;
    if (doc.valid[p]) out.push_back(doc.ids[p]);
  }
  return out;
}

// Copy of doc restricted to its first n segments.
SegmentedDocument head_segments(const SegmentedDocument& doc, std::size_t n) {
  SegmentedDocument out = doc;
  out.N = n;
  out.ids.resize(n * doc.K);
  out.valid.resize(n * doc.K);
  if (out.sentence_range.size() > n) out.sentence_range.resize(n);
  return out;
}

std::int32_t argmax_row(const Tensor& t, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c) {
    if (t.at(row, c) > t.at(row, best)) best = c;
  }
  return static_cast<std::int32_t>(best);
}

StepOutput classification_output(Var logits, const std::vector<std::int32_t>& labels) {
  StepOutput out;
  out.loss = ops::cross_entropy(logits, labels);
  out.stats.add_loss(out.loss.value()[0], labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) out.stats.add_prediction(argmax_row(logits.value(), r), labels[r]);
  return out;
}

StepOutput mlm_output(Graph& g, const ParamStore& params, Var tokens, const std::vector<std::int32_t>& targets,
                      std::span<const std::int32_t> row_of_target, bool tied) {
  std::vector<std::int32_t> rows, gold;
  for (std::size_t p = 0; p < targets.size(); ++p) {
    if (targets[p] == ops::kIgnoreIndex) continue;
    const std::int32_t r = row_of_target.empty() ? static_cast<std::int32_t>(p) : row_of_target[p];
    if (r < 0) continue;
    rows.push_back(r);
    gold.push_back(targets[p]);
  }
  if (rows.empty()) throw EmptyBatchError("batch has no masked-token targets");
  const Var logits = mlm_logits(g, params, "mlm", ops::gather_rows(tokens, rows), "embeddings.word", tied);
  return classification_output(logits, gold);
}

}  // namespace

TaskKind parse_task(std::string_view name) {
  if (name == "MLM" || name == "mlm") return TaskKind::kMlm;
  if (name == "SMLM40" || name == "smlm40" || name == "SMLM-40") return TaskKind::kSmlm40;
  if (name == "SMLM100" || name == "smlm100" || name == "SMLM-100") return TaskKind::kSmlm100;
  if (name == "SOP" || name == "sop") return TaskKind::kSop;
  if (name == "MCMSP" || name == "mcmsp" || name == "MC-MSP") return TaskKind::kMcMsp;
  if (name == "DTC" || name == "dtc") return TaskKind::kDtc;
  throw ConfigError("unknown task: " + std::string(name));
}

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kMlm: return "MLM";
    case TaskKind::kSmlm40: return "SMLM40";
    case TaskKind::kSmlm100: return "SMLM100";
    case TaskKind::kSop: return "SOP";
    case TaskKind::kMcMsp: return "MCMSP";
    case TaskKind::kDtc: return "DTC";
  }
  return "?";
}

double TaskSpec::token_rate() const {
  if (kind == TaskKind::kSmlm40) return 0.4;
  if (kind == TaskKind::kSmlm100) return 1.0;
  return 0.0;
}

void TaskSpec::validate() const {
  auto rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
  };
  rate(mlm_rate, "mlm_rate");
  rate(segment_rate, "segment_rate");
  if (kind == TaskKind::kMcMsp && choices < 2) throw ConfigError("MC-MSP needs at least two choices");
  if (kind == TaskKind::kDtc && labels < 1) throw ConfigError("DTC needs at least one label");
}

std::optional<TaskExample> build_mlm(const SegmentedDocument& doc, double rate, std::size_t vocab,
                                     Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < doc.N; ++i) {
    const auto seg = eligible_positions(doc, i);
    eligible.insert(eligible.end(), seg.begin(), seg.end());
  }
  const auto count = static_cast<std::size_t>(std::lround(rate * static_cast<double>(eligible.size())));
  if (count == 0) return std::nullopt;
  TaskExample ex;
  ex.inputs.push_back(doc);
  ex.token_targets.assign(doc.ids.size(), ops::kIgnoreIndex);
  auto& ids = ex.inputs[0].ids;
  for (std::size_t p : sample_without_replacement(std::move(eligible), count, rng)) {
    ex.token_targets[p] = ids[p];
    const double u = uniform01(rng);
    if (u < 0.8) {
      ids[p] = SpecialTokens::kMask;
    } else if (u < 0.9) {
      ids[p] = static_cast<std::int32_t>(SpecialTokens::kCount + uniform_index(rng, vocab - SpecialTokens::kCount));
    }
  }
  return ex;
}

std::optional<TaskExample> build_smlm(const SegmentedDocument& doc, double segment_rate,
                                      double token_rate, Rng& rng) {
  std::vector<std::size_t> segments;
  for (std::size_t i = 0; i < doc.N; ++i) {
    if (doc.valid[i * doc.K]) segments.push_back(i);
  }
  const auto chosen =
      static_cast<std::size_t>(std::ceil(segment_rate * static_cast<double>(segments.size()) - 1e-9));
  TaskExample ex;
  ex.inputs.push_back(doc);
  ex.token_targets.assign(doc.ids.size(), ops::kIgnoreIndex);
  auto& ids = ex.inputs[0].ids;
  std::size_t targets = 0;
  for (std::size_t s : sample_without_replacement(std::move(segments), chosen, rng)) {
    auto eligible = eligible_positions(doc, s);
    const auto count = static_cast<std::size_t>(std::lround(token_rate * static_cast<double>(eligible.size())));
    for (std::size_t p : sample_without_replacement(std::move(eligible), count, rng)) {
      ex.token_targets[p] = ids[p];
      ids[p] = SpecialTokens::kMask;
      ++targets;
    }
  }
  if (targets == 0) return std::nullopt;
  return ex;
}

std::optional<TaskExample> build_sop(const SegmentedDocument& doc, Rng& rng) {
  const std::size_t n = valid_segments(doc);
  if (n < 2) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  TaskExample ex;
  ex.inputs.push_back(doc);
  SegmentedDocument& shown = ex.inputs[0];
  ex.order_targets.assign(doc.N, 0.0f);
  ex.order_mask.assign(doc.N, 0);
  ex.order_scale = static_cast<float>(n - 1);
  for (std::size_t slot = 0; slot < n; ++slot) {
    const std::size_t src = order[slot];
    std::copy_n(doc.ids.begin() + src * doc.K, doc.K, shown.ids.begin() + slot * doc.K);
    std::copy_n(doc.valid.begin() + src * doc.K, doc.K, shown.valid.begin() + slot * doc.K);
    if (slot < doc.sentence_range.size() && src < doc.sentence_range.size()) {
      shown.sentence_range[slot] = doc.sentence_range[src];
    }
    ex.order_targets[slot] = static_cast<float>(src) / ex.order_scale;
    ex.order_mask[slot] = 1;
  }
  return ex;
}

SegmentPool::SegmentPool(std::span<const SegmentedDocument> docs) {
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t i = 0; i < docs[d].N; ++i) {
      if (!docs[d].valid[i * docs[d].K]) continue;
      auto payload = payload_of(docs[d], i);
      if (!payload.empty()) add(d, std::move(payload));
    }
  }
}

void SegmentPool::add(std::size_t doc_id, std::vector<std::int32_t> payload) {
  by_length_[payload.size()].push_back(entries_.size());
  entries_.push_back({doc_id, std::move(payload)});
}

std::vector<std::size_t> SegmentPool::compatible(std::size_t length, std::size_t exclude_doc) const {
  const std::size_t slack = std::max<std::size_t>(1, length / 4);
  std::vector<std::size_t> out;
  for (auto it = by_length_.lower_bound(length > slack ? length - slack : 0);
       it != by_length_.end() && it->first <= length + slack; ++it) {
    for (std::size_t e : it->second) {
      if (entries_[e].doc_id != exclude_doc) out.push_back(e);
    }
  }
  return out;
}

std::optional<TaskExample> build_mcmsp(const SegmentedDocument& doc, std::size_t doc_id,
                                       const SegmentPool& pool, std::size_t choices,
                                       std::size_t n_max, Rng& rng) {
  if (n_max < 3) return std::nullopt;
  const std::size_t usable = std::min(valid_segments(doc), n_max - 1);
  if (usable < 2) return std::nullopt;
  const std::size_t masked = uniform_index(rng, usable);
  const auto truth = payload_of(doc, masked);
  if (truth.empty()) return std::nullopt;
  auto candidates = pool.compatible(truth.size(), doc_id);
  if (candidates.size() < choices - 1) return std::nullopt;
  const auto distractors = sample_without_replacement(std::move(candidates), choices - 1, rng);

  SegmentedDocument base = head_segments(doc, usable);
  for (std::size_t j = 1; j <= truth.size(); ++j) base.ids[masked * doc.K + j] = SpecialTokens::kMask;

  std::vector<std::size_t> order(choices);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  TaskExample ex;
  for (std::size_t k = 0; k < choices; ++k) {
    const auto& payload = order[k] == 0 ? truth : pool.payload(distractors[order[k] - 1]);
    if (order[k] == 0) ex.label = static_cast<std::int32_t>(k);
    SegmentedDocument input = base;
    input.N = usable + 1;
    input.ids.resize(input.N * doc.K, SpecialTokens::kPad);
    input.valid.resize(input.N * doc.K, 0);
    const std::size_t row = usable * doc.K;
    input.ids[row] = SpecialTokens::kCls;
    input.valid[row] = 1;
    for (std::size_t j = 0; j < payload.size() && j + 1 < doc.K; ++j) {
      input.ids[row + 1 + j] = payload[j];
      input.valid[row + 1 + j] = 1;
    }
    ex.inputs.push_back(std::move(input));
  }
  return ex;
}

TaskExample build_dtc(const SegmentedDocument& doc, int label, std::size_t labels) {
  if (label < 0 || static_cast<std::size_t>(label) >= labels) {
    throw ContractError("label " + std::to_string(label) + " outside [0, " + std::to_string(labels) + ")");
  }
  TaskExample ex;
  ex.inputs.push_back(doc);
  ex.label = label;
  return ex;
}

std::optional<TaskExample> build_example(const TaskSpec& spec, const SegmentedDocument& doc,
                                         std::size_t doc_id, const SegmentPool& pool,
                                         std::size_t vocab, std::size_t n_max, Rng& rng) {
  switch (spec.kind) {
    case TaskKind::kMlm: return build_mlm(doc, spec.mlm_rate, vocab, rng);
    case TaskKind::kSmlm40:
    case TaskKind::kSmlm100: return build_smlm(doc, spec.segment_rate, spec.token_rate(), rng);
    case TaskKind::kSop: return build_sop(doc, rng);
    case TaskKind::kMcMsp: return build_mcmsp(doc, doc_id, pool, spec.choices, n_max, rng);
    case TaskKind::kDtc: return build_dtc(doc, doc.label, spec.labels);
  }
  return std::nullopt;
}

std::vector<SegmentedDocument> single_segment_documents(std::span<const SegmentedDocument> docs) {
  std::vector<SegmentedDocument> out;
  for (const SegmentedDocument& doc : docs) {
    for (std::size_t i = 0; i < doc.N; ++i) {
      if (!doc.valid[i * doc.K]) continue;
      SegmentedDocument one;
      one.K = doc.K;
      one.N = 1;
      one.ids.assign(doc.ids.begin() + i * doc.K, doc.ids.begin() + (i + 1) * doc.K);
      one.valid.assign(doc.valid.begin() + i * doc.K, doc.valid.begin() + (i + 1) * doc.K);
      one.sentence_count = 1;
      one.label = doc.label;
      out.push_back(std::move(one));
    }
  }
  return out;
}

TaskBatch collate(TaskKind kind, std::span<const TaskExample> examples) {
  if (examples.empty()) throw EmptyBatchError("no examples to collate");
  TaskBatch batch;
  batch.kind = kind;
  batch.examples = examples.size();
  batch.choices = examples[0].inputs.size();
  std::vector<SegmentedDocument> docs;
  for (const TaskExample& ex : examples) {
    if (ex.inputs.size() != batch.choices) throw ContractError("examples disagree on the number of inputs");
    docs.insert(docs.end(), ex.inputs.begin(), ex.inputs.end());
  }
  batch.inputs = HatBatch::from_documents(docs);
  const std::size_t N = batch.inputs.N, K = batch.inputs.K;
  const bool tokens = kind == TaskKind::kMlm || kind == TaskKind::kSmlm40 || kind == TaskKind::kSmlm100;
  if (tokens) batch.token_targets.assign(batch.inputs.ids.size(), ops::kIgnoreIndex);
  if (kind == TaskKind::kSop) {
    batch.order_targets.assign(docs.size() * N, 0.0f);
    batch.order_mask.assign(docs.size() * N, 0);
    batch.order_scale.assign(docs.size() * N, 1.0f);
  }
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const TaskExample& ex = examples[e];
    batch.labels.push_back(ex.label);
    if (tokens) {
      // Grid position p of a document with N_e segments maps to the same
      // (segment, column) in the padded batch.
      std::copy(ex.token_targets.begin(), ex.token_targets.end(), batch.token_targets.begin() + e * N * K);
    }
    if (kind == TaskKind::kSop) {
      for (std::size_t i = 0; i < ex.order_targets.size(); ++i) {
        batch.order_targets[e * N + i] = ex.order_targets[i];
        batch.order_mask[e * N + i] = ex.order_mask[i];
        batch.order_scale[e * N + i] = ex.order_scale;
      }
    }
  }
  return batch;
}

double accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> gold) {
  if (predicted.size() != gold.size()) throw DimensionError("accuracy: length mismatch");
  if (gold.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += predicted[i] == gold[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double micro_f1(std::span<const std::int32_t> predicted, std::span<const std::int32_t> gold) {
  if (predicted.size() != gold.size()) throw DimensionError("micro_f1: length mismatch");
  if (gold.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::set<std::int32_t> classes(gold.begin(), gold.end());
  classes.insert(predicted.begin(), predicted.end());
  double tp = 0, fp = 0, fn = 0;
  for (std::int32_t c : classes) {
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool p = predicted[i] == c, g = gold[i] == c;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

void MetricAccumulator::add_loss(double mean, std::size_t count) {
  loss_sum_ += mean * static_cast<double>(count);
  loss_count_ += count;
}

void MetricAccumulator::add_abs_error(double sum, std::size_t count) {
  abs_sum_ += sum;
  abs_count_ += count;
}

void MetricAccumulator::add_prediction(std::int32_t predicted, std::int32_t gold) {
  predicted_.push_back(predicted);
  gold_.push_back(gold);
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  loss_sum_ += other.loss_sum_;
  loss_count_ += other.loss_count_;
  abs_sum_ += other.abs_sum_;
  abs_count_ += other.abs_count_;
  predicted_.insert(predicted_.end(), other.predicted_.begin(), other.predicted_.end());
  gold_.insert(gold_.end(), other.gold_.begin(), other.gold_.end());
}

Metrics MetricAccumulator::result() const {
  Metrics m;
  m.count = loss_count_;
  if (loss_count_) m.loss = loss_sum_ / static_cast<double>(loss_count_);
  if (abs_count_) m.mae = abs_sum_ / static_cast<double>(abs_count_);
  if (!gold_.empty()) {
    m.accuracy = accuracy(predicted_, gold_);
    m.micro_f1 = micro_f1(predicted_, gold_);
  }
  return m;
}

double primary_metric(TaskKind kind, const Metrics& m) {
  switch (kind) {
    case TaskKind::kSop: return m.mae;
    case TaskKind::kMcMsp: return m.accuracy;
    case TaskKind::kDtc: return m.micro_f1;
    default: return m.loss;
  }
}

bool higher_is_better(TaskKind kind) { return kind == TaskKind::kMcMsp || kind == TaskKind::kDtc; }

std::string_view primary_metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kSop: return "mae";
    case TaskKind::kMcMsp: return "accuracy";
    case TaskKind::kDtc: return "micro_f1";
    default: return "loss";
  }
}

void add_task_head(ParamStore& params, const TaskSpec& spec, std::size_t hidden, Rng& rng) {
  switch (spec.kind) {
    case TaskKind::kSop: add_head_params(params, "sop", hidden, 1, rng); break;
    case TaskKind::kMcMsp: add_head_params(params, "mcmsp", hidden, 1, rng); break;
    case TaskKind::kDtc: add_head_params(params, "dtc", hidden, spec.labels, rng); break;
    default: break;
  }
}

TaskModel hat_task_model(const HatConfig& config, const TaskSpec& spec) {
  return [config, spec](Graph& g, const ParamStore& params, const TaskBatch& batch) -> StepOutput {
    const EncoderOutput enc = hat_forward(g, params, config, batch.inputs);
    switch (spec.kind) {
      case TaskKind::kSop: {
        const Var pred = segment_head(g, params, "sop", enc);
        StepOutput out;
        out.loss = spec.sop_mse ? ops::mse_loss(pred, batch.order_targets, batch.order_mask)
                                : ops::l1_loss(pred, batch.order_targets, batch.order_mask);
        double abs_sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < batch.order_mask.size(); ++r) {
          if (!batch.order_mask[r]) continue;
          const double s = batch.order_scale[r];
          abs_sum += std::abs(double(pred.value()[r]) * s - double(batch.order_targets[r]) * s);
          ++n;
        }
        out.stats.add_loss(out.loss.value()[0], n);
        out.stats.add_abs_error(abs_sum, n);
        return out;
      }
      case TaskKind::kMcMsp:
        return classification_output(mcqa_head(g, params, "mcmsp", enc, batch.choices, spec.choices),
                                     batch.labels);
      case TaskKind::kDtc: return classification_output(document_head(g, params, "dtc", enc), batch.labels);
      default: return mlm_output(g, params, enc.tokens, batch.token_targets, {}, config.tie_mlm);
    }
  };
}

TaskModel flat_mlm_model(const FlatConfig& config, FlatAttention attention) {
  return [config, attention](Graph& g, const ParamStore& params, const TaskBatch& batch) -> StepOutput {
    const FlatBatch flat = FlatBatch::from_grid(batch.inputs);
    const Var tokens = flat_forward(g, params, config, flat, attention);
    return mlm_output(g, params, tokens, batch.token_targets, flat.grid_to_flat, config.tie_mlm);
  };
}

}  // namespace hatkit
