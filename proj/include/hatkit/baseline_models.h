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

#ifndef HATKIT_BASELINE_MODELS_H_
#define HATKIT_BASELINE_MODELS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hatkit/attention.h"
#include "hatkit/graph.h"
#include "hatkit/hat_model.h"
#include "hatkit/param_store.h"
#include "hatkit/transformer.h"

namespace hatkit {

// Flat transformer encoder with learned absolute positions. Doubles as the
// dense baseline, the window+global baseline and the warm-start source.
struct FlatConfig {
  std::size_t hidden = 256;
  std::size_t heads = 4;
  std::size_t ffn = 1024;
  std::size_t vocab = 30522;
  std::size_t max_positions = 1024;
  std::size_t layers = 6;
  float dropout = 0.1f;
  bool tie_mlm = true;

  BlockDims block_dims() const { return {hidden, heads, ffn}; }
  void validate() const;
};

// Parameter names: embeddings.{word,position,type}, layer.<i>.*, mlm.*.
ParamStore init_flat(const FlatConfig& config, std::uint64_t seed);
std::string flat_block_prefix(std::size_t layer);

// B sequences of T tokens.
struct FlatBatch {
  std::size_t B = 0;
  std::size_t T = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> valid;
  std::vector<std::int32_t> types;  // empty = all zero
  std::vector<std::uint8_t> global;
  // For batches built from a segment grid: flat row of every grid position
  // (b, i, j), or -1 for padding.
  std::vector<std::int32_t> grid_to_flat;

  // Flattens a segment grid to [CLS] s_1 [SEP] s_2 ... [SEP] s_n followed by
  // padding to T (default N*K). The CLS of segment i > 0 maps to the [SEP]
  // before it; CLS and every [SEP] are global.
  static FlatBatch from_grid(const HatBatch& grid, std::size_t T = 0);
  // Single unsegmented sequences without globals.
  static FlatBatch from_sequences(const std::vector<std::vector<std::int32_t>>& sequences,
                                  std::size_t T = 0);
};

struct WindowConfig {
  // Total local width: interior queries see |q - k| <= window/2; the window
  // is shifted inward at the sequence edges so every query sees window + 1
  // consecutive keys.
  std::size_t window = 128;
  bool use_globals = true;
};

enum class AttentionMode {
  kDense,
  kWindow,        // sparse evaluation of the window+global pattern
  kWindowMasked,  // dense logits with the same pattern as an additive mask
};

struct FlatAttention {
  AttentionMode mode = AttentionMode::kDense;
  WindowConfig window;
};

// First and last (inclusive) local key of query q.
std::pair<std::size_t, std::size_t> window_span(std::size_t q, std::size_t T, std::size_t window);

// Attention pattern over one batch; groups are the B sequences.
std::shared_ptr<const AttentionPattern> make_flat_pattern(const FlatBatch& batch,
                                                          const FlatAttention& attention);

// Token representations [B*T x H].
Var flat_forward(Graph& g, const ParamStore& params, const FlatConfig& config,
                 const FlatBatch& batch, const FlatAttention& attention = {},
                 std::vector<Var>* layers = nullptr);

// Exact number of admitted query/key pairs of the window+global pattern:
// layers * |local U global rows U global columns|.
std::uint64_t window_cost(const WindowConfig& window, std::size_t layers, std::size_t T,
                          std::span<const std::size_t> global_positions);
// Globals of the flattened format for N full segments of K tokens.
std::vector<std::size_t> flat_global_positions(std::size_t N, std::size_t K);

}  // namespace hatkit

#endif  // HATKIT_BASELINE_MODELS_H_
