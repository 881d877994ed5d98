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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <new>
#include <sstream>

#include "hatkit/attention.h"
#include "hatkit/checkpoint.h"
#include "hatkit/error.h"
#include "hatkit/heads.h"
#include "hatkit/memory.h"
#include "hatkit/ops.h"
#include "hatkit/random.h"
#include "hatkit/trainer.h"
#include "hatkit/vocab.h"

namespace hatkit {
namespace {

constexpr const char* kHead = "head";

// Fixed synthetic inputs of one benchmark step.
struct BenchInputs {
  HatBatch grid;
  FlatBatch flat;
  std::vector<std::int32_t> mlm_rows;  // grid rows
  std::vector<std::int32_t> mlm_gold;
  std::vector<std::int32_t> labels;
  std::size_t questions = 0;
};

std::size_t documents_per_step(BenchTask task, const BenchConfig& config) {
  return task == BenchTask::kMcqa ? config.batch_size * config.choices : config.batch_size;
}

std::size_t model_vocab(const BenchModel& model) {
  return model.kind == BenchModelKind::kHat ? model.hat.vocab : model.flat.vocab;
}

BenchInputs make_inputs(const BenchModel& model, BenchTask task, const BenchConfig& config) {
  Rng rng(mix_seed(config.seed, 0xbe7c));
  const std::size_t vocab = model_vocab(model);
  const std::size_t first = static_cast<std::size_t>(SpecialTokens::kCount);
  const std::size_t docs = documents_per_step(task, config);
  std::vector<SegmentedDocument> batch(docs);
  for (SegmentedDocument& doc : batch) {
    doc.K = config.K;
    doc.N = config.N;
    doc.ids.resize(config.N * config.K);
    doc.valid.assign(config.N * config.K, 1);
    for (std::size_t r = 0; r < doc.ids.size(); ++r) {
      doc.ids[r] = r % config.K == 0 ? SpecialTokens::kCls
                                     : static_cast<std::int32_t>(first + uniform_index(rng, vocab - first));
    }
  }
  BenchInputs in;
  in.grid = HatBatch::from_documents(batch, config.N);
  if (model.kind != BenchModelKind::kHat) in.flat = FlatBatch::from_grid(in.grid);
  switch (task) {
    case BenchTask::kMlm:
      for (std::size_t r = 0; r < in.grid.ids.size(); ++r) {
        if (r % config.K == 0 || uniform01(rng) >= config.mlm_rate) continue;
        in.mlm_rows.push_back(static_cast<std::int32_t>(r));
        in.mlm_gold.push_back(in.grid.ids[r]);
      }
      if (in.mlm_rows.empty()) {
        in.mlm_rows.push_back(1);
        in.mlm_gold.push_back(in.grid.ids[1]);
      }
      break;
    case BenchTask::kDocCls:
      for (std::size_t b = 0; b < docs; ++b) in.labels.push_back(static_cast<std::int32_t>(uniform_index(rng, config.labels)));
      break;
    case BenchTask::kSegCls:
      for (std::size_t s = 0; s < docs * config.N; ++s) {
        in.labels.push_back(static_cast<std::int32_t>(uniform_index(rng, config.labels)));
      }
      break;
    case BenchTask::kMcqa:
      in.questions = config.batch_size;
      for (std::size_t q = 0; q < in.questions; ++q) {
        in.labels.push_back(static_cast<std::int32_t>(uniform_index(rng, config.choices)));
      }
      break;
  }
  return in;
}

ParamStore make_params(const BenchModel& model, BenchTask task, const BenchConfig& config) {
  ParamStore store = model.kind == BenchModelKind::kHat ? init_hat(model.hat, config.seed)
                                                        : init_flat(model.flat, config.seed);
  if (task != BenchTask::kMlm) {
    Rng rng(mix_seed(config.seed, 0x4ead));
    const std::size_t hidden = model.kind == BenchModelKind::kHat ? model.hat.hidden : model.flat.hidden;
    add_head_params(store, kHead, hidden, task == BenchTask::kMcqa ? 1 : config.labels, rng);
  }
  return store;
}

FlatAttention flat_attention(const BenchModel& model) {
  FlatAttention attention;
  if (model.kind == BenchModelKind::kWindow) {
    attention.mode = AttentionMode::kWindow;
    attention.window = model.window;
  }
  return attention;
}

// Token grid and segment representations of either encoder family.
EncoderOutput encode(Graph& g, const ParamStore& params, const BenchModel& model, const BenchInputs& in) {
  if (model.kind == BenchModelKind::kHat) return hat_forward(g, params, model.hat, in.grid);
  EncoderOutput enc;
  enc.B = in.grid.B;
  enc.N = in.grid.N;
  enc.K = in.grid.K;
  enc.tokens = flat_forward(g, params, model.flat, in.flat, flat_attention(model));
  std::vector<std::int32_t> cls_rows(enc.B * enc.N);
  for (std::size_t s = 0; s < cls_rows.size(); ++s) cls_rows[s] = in.flat.grid_to_flat[s * enc.K];
  enc.segments = ops::gather_rows(enc.tokens, cls_rows);
  enc.segment_valid.assign(cls_rows.size(), 1);
  return enc;
}

Var step_loss(Graph& g, const ParamStore& params, const BenchModel& model, BenchTask task,
              const BenchInputs& in) {
  const EncoderOutput enc = encode(g, params, model, in);
  switch (task) {
    case BenchTask::kMlm: {
      std::vector<std::int32_t> rows = in.mlm_rows;
      if (model.kind != BenchModelKind::kHat) {
        for (std::int32_t& r : rows) r = in.flat.grid_to_flat[r];
      }
      const bool tied = model.kind == BenchModelKind::kHat ? model.hat.tie_mlm : model.flat.tie_mlm;
      const Var logits = mlm_logits(g, params, "mlm", ops::gather_rows(enc.tokens, rows), "embeddings.word", tied);
      return ops::cross_entropy(logits, in.mlm_gold);
    }
    case BenchTask::kDocCls: return ops::cross_entropy(document_head(g, params, kHead, enc), in.labels);
    case BenchTask::kSegCls: return ops::cross_entropy(segment_head(g, params, kHead, enc), in.labels);
    case BenchTask::kMcqa: {
      const std::size_t choices = enc.B / in.questions;
      return ops::cross_entropy(mcqa_head(g, params, kHead, enc, choices, choices), in.labels);
    }
  }
  throw ContractError("unknown benchmark task");
}

nlohmann::json config_echo(const BenchModel& model, BenchTask task, BenchPhase phase, const BenchConfig& config) {
  nlohmann::json doc;
  switch (model.kind) {
    case BenchModelKind::kHat:
      doc["model"] = {{"kind", "hat"}, {"config", to_json(model.hat)}};
      break;
    case BenchModelKind::kWindow:
      doc["model"] = {{"kind", "window"},
                      {"config", to_json(model.flat)},
                      {"window", model.window.window},
                      {"globals", model.window.use_globals}};
      break;
    case BenchModelKind::kDense:
      doc["model"] = {{"kind", "dense"}, {"config", to_json(model.flat)}};
      break;
  }
  doc["task"] = bench_task_name(task);
  doc["phase"] = bench_phase_name(phase);
  doc["batch_size"] = config.batch_size;
  doc["N"] = config.N;
  doc["K"] = config.K;
  doc["choices"] = config.choices;
  doc["labels"] = config.labels;
  doc["mlm_rate"] = config.mlm_rate;
  doc["lr"] = config.lr;
  doc["seed"] = config.seed;
  doc["memory_limit_bytes"] = config.memory_limit_bytes;
  return doc;
}

// Restores the tracker limit on scope exit.
class LimitScope {
 public:
  explicit LimitScope(std::size_t bytes) : previous_(MemoryTracker::limit()) { MemoryTracker::set_limit(bytes); }
  ~LimitScope() { MemoryTracker::set_limit(previous_); }
  LimitScope(const LimitScope&) = delete;
  LimitScope& operator=(const LimitScope&) = delete;

 private:
  std::size_t previous_;
};

std::string clean_field(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BenchTask parse_bench_task(std::string_view name) {
  if (name == "MLM" || name == "mlm") return BenchTask::kMlm;
  if (name == "DocCLS" || name == "doccls") return BenchTask::kDocCls;
  if (name == "SegCLS" || name == "segcls") return BenchTask::kSegCls;
  if (name == "MCQA" || name == "mcqa") return BenchTask::kMcqa;
  throw ConfigError("unknown benchmark task: " + std::string(name));
}

std::string_view bench_task_name(BenchTask task) {
  switch (task) {
    case BenchTask::kMlm: return "MLM";
    case BenchTask::kDocCls: return "DocCLS";
    case BenchTask::kSegCls: return "SegCLS";
    case BenchTask::kMcqa: return "MCQA";
  }
  return "?";
}

BenchPhase parse_bench_phase(std::string_view name) {
  if (name == "train") return BenchPhase::kTrain;
  if (name == "infer") return BenchPhase::kInfer;
  throw ConfigError("unknown benchmark phase: " + std::string(name));
}

std::string_view bench_phase_name(BenchPhase phase) { return phase == BenchPhase::kTrain ? "train" : "infer"; }

BenchModel BenchModel::hat_model(std::string id, HatConfig config) {
  BenchModel m;
  m.id = std::move(id);
  m.kind = BenchModelKind::kHat;
  m.hat = std::move(config);
  return m;
}

BenchModel BenchModel::window_model(std::string id, FlatConfig config, WindowConfig window) {
  BenchModel m;
  m.id = std::move(id);
  m.kind = BenchModelKind::kWindow;
  m.flat = config;
  m.window = window;
  return m;
}

BenchModel BenchModel::dense_model(std::string id, FlatConfig config) {
  BenchModel m;
  m.id = std::move(id);
  m.kind = BenchModelKind::kDense;
  m.flat = config;
  return m;
}

void BenchConfig::validate() const {
  if (batch_size == 0 || N == 0 || K < 2) throw ConfigError("benchmark needs batch_size, N >= 1 and K >= 2");
  if (repetitions < 3) throw ConfigError("benchmark needs at least 3 repetitions");
  if (warmup_steps < 5) throw ConfigError("benchmark needs at least 5 warmup steps");
  if (steps == 0) throw ConfigError("benchmark needs at least one timed step");
  if (choices < 2 || labels < 2) throw ConfigError("choices and labels must be at least 2");
  if (!(mlm_rate > 0.0 && mlm_rate <= 1.0)) throw ConfigError("mlm_rate must lie in (0, 1]");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
}

std::uint64_t bench_score_count(const BenchModel& model, BenchTask task, const BenchConfig& config) {
  const std::uint64_t docs = documents_per_step(task, config);
  const std::size_t T = config.N * config.K;
  switch (model.kind) {
    case BenchModelKind::kHat: return docs * attention_cost(model.hat, config.N, config.K).score_count;
    case BenchModelKind::kWindow:
      return docs * window_cost(model.window, model.flat.layers, T, flat_global_positions(config.N, config.K));
    case BenchModelKind::kDense: return docs * model.flat.layers * std::uint64_t(T) * T;
  }
  return 0;
}

BenchReport measure(const BenchModel& model, BenchTask task, BenchPhase phase, const BenchConfig& config) {
  config.validate();
  if (model.kind == BenchModelKind::kHat) {
    model.hat.validate();
    if (model.hat.K != config.K || model.hat.n_max < config.N) {
      throw ConfigError("HAT model does not fit N = " + std::to_string(config.N) + ", K = " + std::to_string(config.K));
    }
  } else {
    model.flat.validate();
    if (model.flat.max_positions < config.N * config.K) {
      throw ConfigError("flat model has fewer than T = " + std::to_string(config.N * config.K) + " positions");
    }
  }
  BenchReport report;
  report.model_id = model.id;
  report.task = task;
  report.phase = phase;
  report.repetitions = config.repetitions;
  report.warmup_steps = config.warmup_steps;
  report.steps = config.steps;
  report.score_count = bench_score_count(model, task, config);
  report.config = config_echo(model, task, phase, config);

  const LimitScope limit(config.memory_limit_bytes);
  try {
    const BenchInputs in = make_inputs(model, task, config);
    {
      ParamStore params = make_params(model, task, config);
      Graph g(false);
      ScoreCounter counter;
      step_loss(g, params, model, task, in);
      report.measured_score_count = counter.count();
    }
    TrainConfig opt;
    opt.lr = config.lr;
    std::uint64_t step_seed = 0;
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      ParamStore params = make_params(model, task, config);
      AdamW adam(opt);
      auto step = [&] {
        if (phase == BenchPhase::kTrain) {
          Graph g(true, mix_seed(config.seed, ++step_seed));
          const Var loss = step_loss(g, params, model, task, in);
          g.backward(loss);
          g.accumulate_into(params);
          adam.step(params, config.lr);
        } else {
          Graph g(false);
          step_loss(g, params, model, task, in);
        }
      };
      for (std::size_t s = 0; s < config.warmup_steps; ++s) step();
      MemoryTracker::reset_peak();
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t s = 0; s < config.steps; ++s) step();
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.run_batches_per_second.push_back(static_cast<double>(config.steps) / seconds);
      report.run_peak_memory_bytes.push_back(MemoryTracker::peak_bytes());
    }
  } catch (const std::bad_alloc&) {
    report.ok = false;
    report.failure = "out of memory";
    if (config.memory_limit_bytes) report.failure += " (limit " + std::to_string(config.memory_limit_bytes) + " bytes)";
    report.batches_per_second = 0.0;
    report.peak_memory_bytes = 0;
    report.run_batches_per_second.clear();
    report.run_peak_memory_bytes.clear();
    return report;
  }
  report.batches_per_second = *std::max_element(report.run_batches_per_second.begin(), report.run_batches_per_second.end());
  report.peak_memory_bytes = *std::min_element(report.run_peak_memory_bytes.begin(), report.run_peak_memory_bytes.end());
  return report;
}

long percent_saving(double x, double ref) {
  if (!(ref > 0.0) || !std::isfinite(x)) throw ContractError("percentage against a non-positive reference");
  return std::lround(100.0 * (ref - x) / ref);
}

Comparison compare(const std::vector<BenchReport>& reports, std::size_t reference_index) {
  if (reports.size() < 2) throw ContractError("comparison needs at least two reports");
  if (reference_index >= reports.size()) throw ContractError("reference index out of range");
  const BenchReport& ref = reports[reference_index];
  for (const BenchReport& r : reports) {
    if (r.task != ref.task || r.phase != ref.phase) {
      throw ContractError("reports mix tasks or phases: " + r.model_id + " is " + std::string(bench_task_name(r.task)) +
                          "/" + std::string(bench_phase_name(r.phase)) + ", reference is " +
                          std::string(bench_task_name(ref.task)) + "/" + std::string(bench_phase_name(ref.phase)));
    }
  }
  if (!ref.ok) throw ContractError("reference report " + ref.model_id + " failed: " + ref.failure);
  Comparison out;
  out.reference = ref.model_id;
  out.task = ref.task;
  out.phase = ref.phase;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const BenchReport& r = reports[i];
    ComparisonRow row;
    row.model_id = r.model_id;
    row.reference = i == reference_index;
    row.ok = r.ok;
    row.score_count = r.score_count;
    if (ref.score_count > 0) row.score_saving = percent_saving(double(r.score_count), double(ref.score_count));
    if (r.ok) {
      row.seconds_per_batch = r.seconds_per_batch();
      row.time_saving = percent_saving(row.seconds_per_batch, ref.seconds_per_batch());
      row.peak_memory_bytes = r.peak_memory_bytes;
      if (ref.peak_memory_bytes > 0) {
        row.memory_saving = percent_saving(double(r.peak_memory_bytes), double(ref.peak_memory_bytes));
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string render_comparison(const Comparison& comparison) {
  auto signed_pct = [](long v) { return std::string("(") + (v > 0 ? "+" : "") + std::to_string(v) + "%)"; };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"model", "sec/batch", "time", "peak MiB", "memory", "scores", "scores"});
  for (const ComparisonRow& r : comparison.rows) {
    const bool is_ref = r.reference;
    char sec[32], mib[32];
    std::snprintf(sec, sizeof sec, "%.4f", r.seconds_per_batch);
    std::snprintf(mib, sizeof mib, "%.1f", double(r.peak_memory_bytes) / (1024.0 * 1024.0));
    if (!r.ok) {
      cells.push_back({r.model_id, "failed", "", "", "", std::to_string(r.score_count), signed_pct(r.score_saving)});
      continue;
    }
    cells.push_back({r.model_id, sec, is_ref ? "ref" : signed_pct(r.time_saving), mib,
                     is_ref ? "ref" : signed_pct(r.memory_saving), std::to_string(r.score_count),
                     is_ref ? "ref" : signed_pct(r.score_saving)});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  out << bench_task_name(comparison.task) << " " << bench_phase_name(comparison.phase) << ", reference "
      << comparison.reference << "\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json to_json(const BenchReport& report) {
  return {{"model_id", report.model_id},
          {"task", bench_task_name(report.task)},
          {"phase", bench_phase_name(report.phase)},
          {"ok", report.ok},
          {"failure", report.failure},
          {"batches_per_second", report.batches_per_second},
          {"peak_memory_bytes", report.peak_memory_bytes},
          {"score_count", report.score_count},
          {"measured_score_count", report.measured_score_count},
          {"repetitions", report.repetitions},
          {"warmup_steps", report.warmup_steps},
          {"steps", report.steps},
          {"policy", report.policy},
          {"run_batches_per_second", report.run_batches_per_second},
          {"run_peak_memory_bytes", report.run_peak_memory_bytes},
          {"config", report.config}};
}

BenchReport bench_report_from_json(const nlohmann::json& doc) {
  try {
    BenchReport r;
    r.model_id = doc.at("model_id").get<std::string>();
    r.task = parse_bench_task(doc.at("task").get<std::string>());
    r.phase = parse_bench_phase(doc.at("phase").get<std::string>());
    r.ok = doc.at("ok").get<bool>();
    r.failure = doc.value("failure", "");
    r.batches_per_second = doc.at("batches_per_second").get<double>();
    r.peak_memory_bytes = doc.at("peak_memory_bytes").get<std::size_t>();
    r.score_count = doc.at("score_count").get<std::uint64_t>();
    r.measured_score_count = doc.value("measured_score_count", std::uint64_t{0});
    r.repetitions = doc.at("repetitions").get<std::size_t>();
    r.warmup_steps = doc.value("warmup_steps", std::size_t{0});
    r.steps = doc.value("steps", std::size_t{0});
    r.policy = doc.value("policy", "best-of-n");
    r.run_batches_per_second = doc.value("run_batches_per_second", std::vector<double>{});
    r.run_peak_memory_bytes = doc.value("run_peak_memory_bytes", std::vector<std::size_t>{});
    r.config = doc.value("config", nlohmann::json::object());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed benchmark report: ") + e.what());
  }
}

std::string reports_to_csv(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  out << "model_id,task,phase,ok,failure,batches_per_second,seconds_per_batch,peak_memory_bytes,"
         "score_count,measured_score_count,repetitions,warmup_steps,steps,policy\n";
  for (const BenchReport& r : reports) {
    out << clean_field(r.model_id) << ',' << bench_task_name(r.task) << ',' << bench_phase_name(r.phase) << ','
        << (r.ok ? 1 : 0) << ',' << clean_field(r.failure) << ',' << format_double(r.batches_per_second) << ','
        << format_double(r.seconds_per_batch()) << ',' << r.peak_memory_bytes << ',' << r.score_count << ','
        << r.measured_score_count << ',' << r.repetitions << ',' << r.warmup_steps << ',' << r.steps << ','
        << clean_field(r.policy) << '\n';
  }
  return out.str();
}

std::vector<BenchReport> reports_from_csv(std::string_view text) {
  std::vector<BenchReport> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("model_id,", 0) != 0) throw ConfigError("benchmark CSV without header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 14) throw ConfigError("benchmark CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    try {
      BenchReport r;
      r.model_id = f[0];
      r.task = parse_bench_task(f[1]);
      r.phase = parse_bench_phase(f[2]);
      r.ok = f[3] == "1";
      r.failure = f[4];
      r.batches_per_second = std::stod(f[5]);
      r.peak_memory_bytes = std::stoull(f[7]);
      r.score_count = std::stoull(f[8]);
      r.measured_score_count = std::stoull(f[9]);
      r.repetitions = std::stoull(f[10]);
      r.warmup_steps = std::stoull(f[11]);
      r.steps = std::stoull(f[12]);
      r.policy = f[13];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("benchmark CSV line " + std::to_string(line_no) + " has a malformed number");
    }
  }
  return out;
}

}  // namespace hatkit
