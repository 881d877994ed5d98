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

#ifndef HATKIT_DATASET_H_
#define HATKIT_DATASET_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "hatkit/segmenter.h"

namespace hatkit {

// Segmented-corpus cache: manifest.json (K, per-document segment count,
// label and segmentation counters, free-form metadata) plus ids.bin
// (little-endian int32) and valid.bin (one byte per position) holding the
// concatenated grids. Writing the same documents twice yields identical
// bytes.
void save_dataset(const std::string& dir, const std::vector<SegmentedDocument>& docs,
                  const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedDataset {
  std::vector<SegmentedDocument> docs;
  nlohmann::json metadata;
};
// Throws IoError on a missing or inconsistent cache.
LoadedDataset load_dataset(const std::string& dir);

}  // namespace hatkit

#endif  // HATKIT_DATASET_H_
