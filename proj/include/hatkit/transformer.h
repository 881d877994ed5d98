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

#ifndef HATKIT_TRANSFORMER_H_
#define HATKIT_TRANSFORMER_H_

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "hatkit/attention.h"
#include "hatkit/graph.h"
#include "hatkit/param_store.h"
#include "hatkit/random.h"

namespace hatkit {

inline constexpr float kInitStd = 0.02f;

struct BlockDims {
  std::size_t hidden = 0;
  std::size_t heads = 1;
  std::size_t ffn = 0;
};

// Suffixes of the tensors owned by one transformer block, in creation order.
const std::vector<std::string>& block_param_suffixes();

// weight [in x out] ~ truncated normal, bias zeros.
void add_linear_params(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out, Rng& rng);
void add_layer_norm_params(ParamStore& store, const std::string& prefix, std::size_t dim);
void add_block_params(ParamStore& store, const std::string& prefix, const BlockDims& dims,
                      Rng& rng);

Var apply_linear(Graph& g, const ParamStore& store, const std::string& prefix, Var x);
Var apply_layer_norm(Graph& g, const ParamStore& store, const std::string& prefix, Var x);

// Post-LN block:
//   a = LN1(x + O(attention(Qx, Kx, Vx)))
//   y = LN2(a + dropout(W2 gelu(W1 a)))
// Attention probabilities are dropped out at the same rate.
Var block_forward(Graph& g, const ParamStore& store, const std::string& prefix, Var x,
                  std::shared_ptr<const AttentionPattern> pattern, std::size_t heads,
                  float dropout);

// Multiply-accumulate-free FLOP count of one block over `rows` token rows
// and `scores` evaluated query/key pairs: 4H per score (logits and the
// weighted value sum), 8H^2 per row for the four projections and 4HF per
// row for the feed-forward pair.
double block_flops(const BlockDims& dims, double rows, double scores);

}  // namespace hatkit

#endif  // HATKIT_TRANSFORMER_H_
