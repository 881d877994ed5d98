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

#ifndef HATKIT_CHECKPOINT_H_
#define HATKIT_CHECKPOINT_H_

#include <string>

#include "json.hpp"

#include "hatkit/baseline_models.h"
#include "hatkit/hat_model.h"
#include "hatkit/param_store.h"

namespace hatkit {

// A checkpoint directory holds manifest.json (model kind, config, and the
// name/shape/dtype/file of every tensor) plus one <tensor name>.bin per
// tensor: little-endian float32, row-major.
struct Checkpoint {
  std::string model;  // "hat" or "flat"
  nlohmann::json config;
  ParamStore params;
};

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint);
// Throws IoError on missing/corrupt files and a size mismatch.
Checkpoint load_checkpoint(const std::string& dir);

// Config documents. The readers fill defaults for absent keys and throw
// ConfigError on unknown keys or ill-typed values.
nlohmann::json to_json(const HatConfig& config);
nlohmann::json to_json(const FlatConfig& config);
HatConfig hat_config_from_json(const nlohmann::json& doc);
FlatConfig flat_config_from_json(const nlohmann::json& doc);

// Throws ConfigError unless every key of `doc` is in `allowed`.
void reject_unknown_keys(const nlohmann::json& doc, std::initializer_list<const char*> allowed,
                         const std::string& where);

}  // namespace hatkit

#endif  // HATKIT_CHECKPOINT_H_
