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

#include "run_config.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hatkit/checkpoint.h"
#include "hatkit/dataset.h"
#include "hatkit/error.h"

namespace hatkit::cli {
namespace {

using json = nlohmann::json;

template <typename T>
T get(const json& doc, const char* key, T fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json section(const json& doc, const char* key) {
  if (!doc.contains(key)) return json::object();
  const json& s = doc.at(key);
  if (!s.is_object()) throw ConfigError(std::string(key) + " must be an object");
  return s;
}

// Copy of `doc` without the listed keys.
json without(json doc, std::initializer_list<const char*> keys) {
  for (const char* k : keys) doc.erase(k);
  return doc;
}

SynthSpec parse_synth(const json& doc) {
  const std::string where = "data.synthetic";
  reject_unknown_keys(doc,
                      {"documents", "content_vocab", "topics", "min_sentences", "max_sentences", "min_length",
                       "max_length", "noise", "copy_mode", "copy_noise", "seed"},
                      where);
  SynthSpec s;
  s.documents = get(doc, "documents", s.documents, where);
  s.content_vocab = get(doc, "content_vocab", s.content_vocab, where);
  s.topics = get(doc, "topics", s.topics, where);
  s.min_sentences = get(doc, "min_sentences", s.min_sentences, where);
  s.max_sentences = get(doc, "max_sentences", s.max_sentences, where);
  s.min_length = get(doc, "min_length", s.min_length, where);
  s.max_length = get(doc, "max_length", s.max_length, where);
  s.noise = get(doc, "noise", s.noise, where);
  s.copy_mode = get(doc, "copy_mode", s.copy_mode, where);
  s.copy_noise = get(doc, "copy_noise", s.copy_noise, where);
  s.validate();
  return s;
}

}  // namespace

void ModelSection::set_vocab(std::size_t v) {
  hat.vocab = v;
  flat_config.vocab = v;
}

json ModelSection::to_json() const {
  if (!flat) {
    json doc = hatkit::to_json(hat);
    doc["kind"] = "hat";
    return doc;
  }
  json doc = hatkit::to_json(flat_config);
  doc["kind"] = "flat";
  doc["attention"] = attention.mode == AttentionMode::kDense ? "dense" : "window";
  doc["window"] = attention.window.window;
  doc["use_globals"] = attention.window.use_globals;
  return doc;
}

ModelSection parse_model_section(const json& doc) {
  if (!doc.is_object()) throw ConfigError("model must be an object");
  ModelSection m;
  const std::string kind = get<std::string>(doc, "kind", "hat", "model");
  m.vocab_given = doc.contains("vocab");
  if (kind == "hat") {
    m.hat = hat_config_from_json(without(doc, {"kind"}));
  } else if (kind == "flat") {
    const std::string attention = get<std::string>(doc, "attention", "dense", "model");
    if (attention == "window") {
      m.attention.mode = AttentionMode::kWindow;
    } else if (attention != "dense") {
      throw ConfigError("model.attention must be dense or window");
    }
    m.attention.window.window = get(doc, "window", m.attention.window.window, "model");
    m.attention.window.use_globals = get(doc, "use_globals", m.attention.window.use_globals, "model");
    m.flat = true;
    m.flat_config = flat_config_from_json(without(doc, {"kind", "attention", "window", "use_globals"}));
  } else {
    throw ConfigError("model.kind must be hat or flat");
  }
  return m;
}

TaskSpec parse_task_section(const json& doc) {
  const std::string where = "task";
  reject_unknown_keys(doc, {"kind", "mlm_rate", "segment_rate", "choices", "labels", "sop_mse"}, where);
  TaskSpec t;
  t.kind = parse_task(get<std::string>(doc, "kind", "MLM", where));
  t.mlm_rate = get(doc, "mlm_rate", t.mlm_rate, where);
  t.segment_rate = get(doc, "segment_rate", t.segment_rate, where);
  t.choices = get(doc, "choices", t.choices, where);
  t.labels = get(doc, "labels", t.labels, where);
  t.sop_mse = get(doc, "sop_mse", t.sop_mse, where);
  t.validate();
  return t;
}

json to_json(const TaskSpec& t) {
  return {{"kind", task_name(t.kind)}, {"mlm_rate", t.mlm_rate}, {"segment_rate", t.segment_rate},
          {"choices", t.choices},      {"labels", t.labels},     {"sop_mse", t.sop_mse}};
}

TrainConfig parse_train_section(const json& doc) {
  const std::string where = "train";
  reject_unknown_keys(doc,
                      {"lr", "warmup", "steps", "batch_size", "seed", "patience", "eval_every", "eval_batch_size",
                       "beta1", "beta2", "eps", "weight_decay", "clip_norm"},
                      where);
  TrainConfig c;
  c.lr = get(doc, "lr", c.lr, where);
  c.warmup = get(doc, "warmup", c.warmup, where);
  c.steps = get(doc, "steps", c.steps, where);
  c.batch_size = get(doc, "batch_size", c.batch_size, where);
  c.seed = get(doc, "seed", c.seed, where);
  c.patience = get(doc, "patience", c.patience, where);
  c.eval_every = get(doc, "eval_every", c.eval_every, where);
  c.eval_batch_size = get(doc, "eval_batch_size", c.eval_batch_size, where);
  c.beta1 = get(doc, "beta1", c.beta1, where);
  c.beta2 = get(doc, "beta2", c.beta2, where);
  c.eps = get(doc, "eps", c.eps, where);
  c.weight_decay = get(doc, "weight_decay", c.weight_decay, where);
  c.clip_norm = get(doc, "clip_norm", c.clip_norm, where);
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"warmup", c.warmup},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"patience", c.patience},
          {"eval_every", c.eval_every},
          {"eval_batch_size", c.eval_batch_size},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm}};
}

RunConfig parse_run_config(const json& doc) {
  reject_unknown_keys(doc, {"model", "task", "train", "data", "out"}, "config");
  RunConfig c;
  c.model = parse_model_section(section(doc, "model"));
  c.task = parse_task_section(section(doc, "task"));
  c.train = parse_train_section(section(doc, "train"));
  if (c.model.flat && c.task.kind != TaskKind::kMlm) throw ConfigError("flat models only train the MLM task");

  const json data = section(doc, "data");
  const std::string where = "data";
  reject_unknown_keys(data, {"train", "dev", "synthetic", "dev_documents", "strategy", "K", "n_max", "single_segments"},
                      where);
  c.data.train = get<std::string>(data, "train", "", where);
  c.data.dev = get<std::string>(data, "dev", "", where);
  c.data.dev_documents = get(data, "dev_documents", c.data.dev_documents, where);
  c.data.strategy = parse_strategy(get<std::string>(data, "strategy", "dynamic", where));
  if (data.contains("K")) c.data.K = get<std::size_t>(data, "K", 0, where);
  if (data.contains("n_max")) c.data.n_max = get<std::size_t>(data, "n_max", 0, where);
  c.data.single_segments = get(data, "single_segments", false, where);
  if (data.contains("synthetic")) {
    const json synth = data.at("synthetic");
    c.data.synthetic = true;
    c.data.synth = parse_synth(synth);
    c.data.synth_seed = get<std::uint64_t>(synth, "seed", 0, "data.synthetic");
    if (!c.data.train.empty() || !c.data.dev.empty()) throw ConfigError("data: use either caches or synthetic");
    if (c.data.dev_documents == 0 || c.data.dev_documents >= c.data.synth.documents) {
      throw ConfigError("data.dev_documents must lie in [1, documents)");
    }
  } else if (c.data.train.empty() || c.data.dev.empty()) {
    throw ConfigError("data needs train and dev caches or a synthetic section");
  }
  if (c.model.flat && c.data.synthetic && (!c.data.K || !c.data.n_max)) {
    throw ConfigError("data.K and data.n_max are required for flat models on synthetic data");
  }
  if (!c.model.vocab_given && c.data.synthetic) c.model.set_vocab(c.data.synth.vocab_size());
  c.out = get<std::string>(doc, "out", "", "config");
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

RunData load_run_data(RunConfig& config) {
  RunData data;
  const std::size_t K = config.data.K.value_or(config.model.hat.K);
  data.n_max = config.data.n_max.value_or(config.model.hat.n_max);
  if (config.data.synthetic) {
    std::vector<SegmentedDocument> docs =
        segment_corpus(synth_corpus(config.data.synth, config.data.synth_seed), config.data.strategy, K, data.n_max);
    const std::size_t split = docs.size() - config.data.dev_documents;
    data.train.assign(docs.begin(), docs.begin() + split);
    data.dev.assign(docs.begin() + split, docs.end());
    data.vocab = config.data.synth.vocab_size();
  } else {
    LoadedDataset train = load_dataset(config.data.train);
    LoadedDataset dev = load_dataset(config.data.dev);
    data.train = std::move(train.docs);
    data.dev = std::move(dev.docs);
    data.vocab = train.metadata.value("vocab_size", std::size_t{0});
    for (const auto* split : {&data.train, &data.dev}) {
      for (const SegmentedDocument& d : *split) data.n_max = std::max(data.n_max, d.N);
    }
  }
  if (config.data.single_segments) {
    data.train = single_segment_documents(data.train);
    data.dev = single_segment_documents(data.dev);
    data.n_max = 1;
  }
  if (data.train.empty() || data.dev.empty()) throw ConfigError("training needs non-empty train and dev data");
  if (!config.model.vocab_given) {
    if (data.vocab == 0) throw ConfigError("model.vocab is required when the data does not record a vocabulary size");
    config.model.set_vocab(data.vocab);
  }
  if (!config.model.flat) {
    if (data.train.front().K != config.model.hat.K) throw ConfigError("data segment length differs from model.K");
    if (data.n_max > config.model.hat.n_max) throw ConfigError("data has more segments than model.n_max");
  }
  return data;
}

std::uint64_t resolve_seed(std::uint64_t config_seed, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HATKIT_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("HATKIT_SEED must be a non-negative integer");
    return v;
  }
  return config_seed;
}

BenchPlan parse_bench_plan(const json& doc) {
  reject_unknown_keys(doc, {"models", "tasks", "phases", "bench", "reference", "out"}, "bench config");
  BenchPlan plan;
  if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty()) {
    throw ConfigError("bench config needs a non-empty models array");
  }
  for (const json& m : doc.at("models")) {
    if (!m.is_object() || !m.contains("id")) throw ConfigError("every benchmark model needs an id");
    const std::string id = get<std::string>(m, "id", "", "models");
    const ModelSection section = parse_model_section(without(m, {"id"}));
    if (!section.flat) {
      plan.models.push_back(BenchModel::hat_model(id, section.hat));
    } else if (section.attention.mode == AttentionMode::kWindow) {
      plan.models.push_back(BenchModel::window_model(id, section.flat_config, section.attention.window));
    } else {
      plan.models.push_back(BenchModel::dense_model(id, section.flat_config));
    }
  }
  for (const std::string& t : get<std::vector<std::string>>(doc, "tasks", {"MLM"}, "bench config")) {
    plan.tasks.push_back(parse_bench_task(t));
  }
  for (const std::string& p : get<std::vector<std::string>>(doc, "phases", {"train"}, "bench config")) {
    plan.phases.push_back(parse_bench_phase(p));
  }
  const json b = section(doc, "bench");
  const std::string where = "bench";
  reject_unknown_keys(b,
                      {"batch_size", "N", "K", "repetitions", "warmup_steps", "steps", "choices", "labels",
                       "mlm_rate", "lr", "seed", "memory_limit_bytes"},
                      where);
  BenchConfig& c = plan.bench;
  c.batch_size = get(b, "batch_size", c.batch_size, where);
  c.N = get(b, "N", c.N, where);
  c.K = get(b, "K", c.K, where);
  c.repetitions = get(b, "repetitions", c.repetitions, where);
  c.warmup_steps = get(b, "warmup_steps", c.warmup_steps, where);
  c.steps = get(b, "steps", c.steps, where);
  c.choices = get(b, "choices", c.choices, where);
  c.labels = get(b, "labels", c.labels, where);
  c.mlm_rate = get(b, "mlm_rate", c.mlm_rate, where);
  c.lr = get(b, "lr", c.lr, where);
  c.seed = get(b, "seed", c.seed, where);
  c.memory_limit_bytes = get(b, "memory_limit_bytes", c.memory_limit_bytes, where);
  c.validate();
  plan.reference = get<std::string>(doc, "reference", plan.models.front().id, "bench config");
  plan.out = get<std::string>(doc, "out", "", "bench config");
  return plan;
}

}  // namespace hatkit::cli
