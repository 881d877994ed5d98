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

#include "hatkit/trainer.h"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hatkit/error.h"

namespace hatkit {
namespace {

constexpr std::uint64_t kDevStream = 0xde5;

void emit(std::vector<TraceRow>& trace, const std::function<void(const TraceRow&)>& on_row, TraceRow row) {
  if (on_row) on_row(row);
  trace.push_back(std::move(row));
}

void emit_metrics(std::vector<TraceRow>& trace, const std::function<void(const TraceRow&)>& on_row,
                  std::size_t step, const std::string& split, const Metrics& m) {
  const std::pair<const char*, double> values[] = {
      {"loss", m.loss}, {"mae", m.mae}, {"accuracy", m.accuracy}, {"micro_f1", m.micro_f1}};
  for (const auto& [name, v] : values) {
    if (!std::isnan(v)) emit(trace, on_row, {step, split, name, v});
  }
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  return order;
}

bool improved(TaskKind kind, double candidate, double best) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(best)) return true;
  return higher_is_better(kind) ? candidate > best : candidate < best;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(warmup >= 0.0 && warmup < 1.0)) throw ConfigError("warmup must lie in [0, 1)");
  if (steps == 0) throw ConfigError("steps must be positive");
  if (batch_size == 0 || eval_batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
  if (!(eps > 0.0) || weight_decay < 0.0) throw ConfigError("eps must be positive, weight_decay non-negative");
}

double learning_rate(const TrainConfig& config, std::size_t step) {
  const auto warm = static_cast<std::size_t>(std::lround(config.warmup * static_cast<double>(config.steps)));
  if (step >= config.steps) return 0.0;
  if (step < warm) return config.lr * static_cast<double>(step) / static_cast<double>(warm);
  return config.lr * static_cast<double>(config.steps - step) / static_cast<double>(config.steps - warm);
}

AdamW::AdamW(const TrainConfig& config)
    : beta1_(config.beta1), beta2_(config.beta2), eps_(config.eps), weight_decay_(config.weight_decay) {}

void AdamW::step(ParamStore& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const std::string& name : params.names()) {
    ParamStore::Entry& e = params.mutable_entry(name);
    if (!e.trainable || e.grad.size() != e.value.size()) continue;
    Moments& mo = moments_[name];
    if (mo.m.empty()) {
      mo.m.assign(e.value.size(), 0.0f);
      mo.v.assign(e.value.size(), 0.0f);
    }
    const double decay = e.value.rank() >= 2 ? weight_decay_ : 0.0;
    float* w = e.value.data();
    const float* g = e.grad.data();
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      mo.m[i] = static_cast<float>(beta1_ * mo.m[i] + (1.0 - beta1_) * g[i]);
      mo.v[i] = static_cast<float>(beta2_ * mo.v[i] + (1.0 - beta2_) * double(g[i]) * g[i]);
      const double update = (mo.m[i] / c1) / (std::sqrt(mo.v[i] / c2) + eps_) + decay * w[i];
      w[i] = static_cast<float>(w[i] - lr * update);
    }
  }
}

double clip_gradients(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const std::string& name : params.names()) {
    const ParamStore::Entry& e = params.entry(name);
    if (!e.trainable) continue;
    for (float g : e.grad.values()) sq += double(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto factor = static_cast<float>(max_norm / norm);
    for (const std::string& name : params.names()) {
      for (float& g : params.mutable_entry(name).grad.values()) g *= factor;
    }
  }
  return norm;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "step,split,metric,value\n";
  char buf[64];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    out << r.step << ',' << r.split << ',' << r.metric << ',' << buf << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "step,split,metric,value") throw IoError("not a metric trace");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    TraceRow r;
    std::string step, value;
    if (!std::getline(ss, step, ',') || !std::getline(ss, r.split, ',') || !std::getline(ss, r.metric, ',') ||
        !std::getline(ss, value)) {
      throw IoError("malformed trace line: " + line);
    }
    try {
      r.step = std::stoull(step);
      r.value = std::stod(value);
    } catch (const std::exception&) {
      throw IoError("malformed trace line: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TaskExample> build_examples(const TaskSpec& spec, const std::vector<SegmentedDocument>& docs,
                                        const SegmentPool& pool, std::size_t vocab, std::size_t n_max,
                                        std::uint64_t seed, std::size_t doc_id_offset) {
  std::vector<TaskExample> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Rng rng(mix_seed(mix_seed(seed, kDevStream), d));
    auto ex = build_example(spec, docs[d], d + doc_id_offset, pool, vocab, n_max, rng);
    if (ex) out.push_back(std::move(*ex));
  }
  return out;
}

Metrics evaluate(const ParamStore& params, const TaskModel& model, const TaskSpec& spec,
                 const std::vector<TaskExample>& examples, std::size_t batch_size) {
  MetricAccumulator acc;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    const TaskBatch batch = collate(spec.kind, std::span(examples).subspan(start, end - start));
    Graph g(false);
    acc.merge(model(g, params, batch).stats);
  }
  return acc.result();
}

TrainResult train(ParamStore params, const TaskModel& model, const TaskSpec& spec,
                  const std::vector<SegmentedDocument>& train_docs,
                  const std::vector<SegmentedDocument>& dev_docs, std::size_t vocab,
                  std::size_t n_max, const TrainConfig& config,
                  const std::function<void(const TraceRow&)>& on_row) {
  config.validate();
  spec.validate();
  if (train_docs.empty()) throw EmptyBatchError("no training documents");
  const SegmentPool pool(train_docs);
  const std::vector<TaskExample> dev =
      build_examples(spec, dev_docs, pool, vocab, n_max, config.seed, train_docs.size());

  TrainResult result;
  AdamW optimizer(config);
  std::size_t evals_since_best = 0;
  double best = std::numeric_limits<double>::quiet_NaN();
  auto run_eval = [&](std::size_t step) {
    if (dev.empty()) return;
    const Metrics m = evaluate(params, model, spec, dev, config.eval_batch_size);
    emit_metrics(result.trace, on_row, step, "dev", m);
    if (step == 0) result.initial_dev = m;
    result.final_dev = m;
    const double v = primary_metric(spec.kind, m);
    if (improved(spec.kind, v, best)) {
      best = v;
      result.best_dev = m;
      result.best_step = step;
      result.params = params;
      evals_since_best = 0;
    } else {
      ++evals_since_best;
    }
  };
  run_eval(0);

  std::size_t epoch = 0, cursor = 0;
  Rng order_rng(mix_seed(config.seed, epoch));
  std::vector<std::size_t> order = permutation(train_docs.size(), order_rng);
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<TaskExample> examples;
    std::size_t tried = 0;
    while (examples.size() < config.batch_size) {
      if (cursor == order.size()) {
        ++epoch;
        cursor = 0;
        Rng rng(mix_seed(config.seed, epoch));
        order = permutation(train_docs.size(), rng);
      }
      if (++tried > 2 * train_docs.size() + config.batch_size) break;
      const std::size_t d = order[cursor++];
      Rng rng(mix_seed(mix_seed(config.seed, epoch + 1), d));
      auto ex = build_example(spec, train_docs[d], d, pool, vocab, n_max, rng);
      if (ex) examples.push_back(std::move(*ex));
    }
    if (examples.empty()) throw EmptyBatchError("no training document yields a " + std::string(task_name(spec.kind)) + " example");
    const TaskBatch batch = collate(spec.kind, examples);

    Graph g(true, mix_seed(config.seed ^ 0xd20, step));
    StepOutput out = model(g, params, batch);
    const double loss = out.loss.value()[0];
    if (!std::isfinite(loss)) {
      throw DivergenceError("training loss is " + std::to_string(loss) + " at step " + std::to_string(step));
    }
    params.zero_grads();
    g.backward(out.loss);
    g.accumulate_into(params);
    const double grad_norm = clip_gradients(params, config.clip_norm);
    if (!std::isfinite(grad_norm)) {
      throw DivergenceError("gradient norm is " + std::to_string(grad_norm) + " at step " + std::to_string(step));
    }
    const double lr = learning_rate(config, step);
    optimizer.step(params, lr);
    result.steps_run = step + 1;
    emit(result.trace, on_row, {step + 1, "train", "loss", loss});
    emit(result.trace, on_row, {step + 1, "train", "lr", lr});

    const bool last = step + 1 == config.steps;
    if ((step + 1) % config.eval_every == 0 || last) {
      run_eval(step + 1);
      if (config.patience > 0 && evals_since_best >= config.patience && !last) {
        result.stopped_early = true;
        break;
      }
    }
  }
  if (dev.empty()) result.params = std::move(params);
  return result;
}

}  // namespace hatkit
