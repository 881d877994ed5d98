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

#ifndef HATKIT_TOOLS_RUN_CONFIG_H_
#define HATKIT_TOOLS_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hatkit/baseline_models.h"
#include "hatkit/bench.h"
#include "hatkit/hat_model.h"
#include "hatkit/segmenter.h"
#include "hatkit/synth.h"
#include "hatkit/tasks.h"
#include "hatkit/trainer.h"
#include "json.hpp"

namespace hatkit::cli {

// "model" section: a HAT encoder (kind "hat", the default) or a flat one
// (kind "flat", attention "dense" or "window").
struct ModelSection {
  bool flat = false;
  HatConfig hat;
  FlatConfig flat_config;
  FlatAttention attention;
  // False when the document omits "vocab" (filled from the data).
  bool vocab_given = false;

  std::size_t hidden() const { return flat ? flat_config.hidden : hat.hidden; }
  std::size_t vocab() const { return flat ? flat_config.vocab : hat.vocab; }
  void set_vocab(std::size_t v);
  nlohmann::json to_json() const;
};

// "data" section: dataset caches written by `segment`, or a synthetic
// corpus generated and segmented in memory.
struct DataSection {
  std::string train;
  std::string dev;
  bool synthetic = false;
  SynthSpec synth;
  std::uint64_t synth_seed = 0;
  std::size_t dev_documents = 200;
  SegmentationStrategy strategy = SegmentationStrategy::kDynamic;
  // Segment grid used for synthetic data; defaults to the model's K/N_max.
  std::optional<std::size_t> K;
  std::optional<std::size_t> n_max;
  // Train on every segment as its own document (flat source pre-training).
  bool single_segments = false;
};

struct RunConfig {
  ModelSection model;
  TaskSpec task;
  TrainConfig train;
  DataSection data;
  std::string out;
};

// Validates the whole document first; unknown keys and ill-typed values
// throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
ModelSection parse_model_section(const nlohmann::json& doc);
TaskSpec parse_task_section(const nlohmann::json& doc);
TrainConfig parse_train_section(const nlohmann::json& doc);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const TaskSpec& spec);

struct RunData {
  std::vector<SegmentedDocument> train;
  std::vector<SegmentedDocument> dev;
  std::size_t vocab = 0;
  std::size_t n_max = 0;
};
// Loads or generates the corpus and completes model.vocab when absent.
RunData load_run_data(RunConfig& config);

// Seed precedence: config < HATKIT_SEED < explicit flag.
std::uint64_t resolve_seed(std::uint64_t config_seed, std::optional<std::uint64_t> flag);

struct BenchPlan {
  std::vector<BenchModel> models;
  std::vector<BenchTask> tasks;
  std::vector<BenchPhase> phases;
  BenchConfig bench;
  std::string reference;
  std::string out;
};
BenchPlan parse_bench_plan(const nlohmann::json& doc);

nlohmann::json read_json_file(const std::string& path);

}  // namespace hatkit::cli

#endif  // HATKIT_TOOLS_RUN_CONFIG_H_
