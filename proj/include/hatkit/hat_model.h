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

#ifndef HATKIT_HAT_MODEL_H_
#define HATKIT_HAT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/graph.h"
#include "hatkit/param_store.h"
#include "hatkit/segmenter.h"
#include "hatkit/transformer.h"

namespace hatkit {

enum class LayerKind { kSW, kCS };
using Layout = std::vector<LayerKind>;

// Named layouts: AH1, AH2, I1..I4, EC1, EC2, LC1, LC2 (12 layers) and
// L16-I3 (16 layers). Unknown names throw LookupError.
Layout layout_by_name(std::string_view name);
const std::vector<std::string>& layout_names();
// "SW,CS,..." rendering and its inverse; parse_layout also accepts names.
std::string layout_string(const Layout& layout);
Layout parse_layout(std::string_view text);
std::size_t count_layers(const Layout& layout, LayerKind kind);

struct HatConfig {
  std::size_t hidden = 256;
  std::size_t heads = 4;
  std::size_t ffn = 1024;
  std::size_t vocab = 30522;
  std::size_t K = 128;
  std::size_t n_max = 8;
  Layout layout;
  float dropout = 0.1f;
  bool tie_mlm = true;

  std::size_t head_dim() const { return hidden / heads; }
  BlockDims block_dims() const { return {hidden, heads, ffn}; }
  // Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

// B documents of N segments x K tokens, row-major [b][i][j].
struct HatBatch {
  std::size_t B = 0;
  std::size_t N = 0;
  std::size_t K = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> valid;
  // Token-type ids; empty means all zero.
  std::vector<std::int32_t> types;

  // Documents shorter than N are padded with all-pad segments (including
  // the CLS slot). N = 0 uses the longest document.
  static HatBatch from_documents(std::span<const SegmentedDocument> docs, std::size_t N = 0);

  bool segment_valid(std::size_t b, std::size_t i) const { return valid[(b * N + i) * K] != 0; }
  std::vector<std::uint8_t> segment_mask() const;
  // Throws ContractError unless the batch is internally consistent.
  void check(const HatConfig& config) const;
};

struct EncoderOutput {
  std::size_t B = 0;
  std::size_t N = 0;
  std::size_t K = 0;
  // [B*N*K x H]; row (b*N + i)*K + j.
  Var tokens;
  // [B*N x H]; the CLS rows of `tokens`.
  Var segments;
  std::vector<std::uint8_t> segment_valid;
  // Token grid after each layer when requested.
  std::vector<Var> layers;
};

// Parameter names: embeddings.{word,sw_position,cs_position,type},
// sw.<j>.* / cs.<j>.* per block (numbered per kind in layout order) and the
// MLM head mlm.*.
ParamStore init_hat(const HatConfig& config, std::uint64_t seed);
// Prefix of the block holding layer `index` of the layout, e.g. "cs.2".
std::string hat_block_prefix(const Layout& layout, std::size_t index);

EncoderOutput hat_forward(Graph& g, const ParamStore& params, const HatConfig& config,
                          const HatBatch& batch, bool keep_layers = false);

struct AttentionCost {
  std::uint64_t score_count = 0;
  double flop_estimate = 0.0;
};

// Per document: score_count = #SW * N * K^2 + #CS * N^2 and flop_estimate
// sums block_flops over the layout (N*K rows per SW block, N per CS block).
AttentionCost attention_cost(const HatConfig& config, std::size_t N, std::size_t K);

}  // namespace hatkit

#endif  // HATKIT_HAT_MODEL_H_
