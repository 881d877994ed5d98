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

#ifndef HATKIT_OPS_H_
#define HATKIT_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hatkit/graph.h"

// Differentiable operations over Var. Matrix ops treat a tensor as
// rows() x cols() (all leading dimensions flattened). Reductions accumulate
// in double precision.
namespace hatkit::ops {

inline constexpr int kIgnoreIndex = -100;

Var matmul(Var a, Var b);
// a * b^T, used for the tied vocabulary projection.
Var matmul_transposed(Var a, Var b);
// x * weight + bias with weight [in x out], bias [out].
Var linear(Var x, Var weight, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, float factor);
// x [m x n] + row [n] broadcast over rows.
Var add_row(Var x, Var row);
Var sum(Var a);
Var mean(Var a);

Var gelu(Var x);
Var tanh(Var x);
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var bias, float eps = 1e-12f);
// Inverted dropout; identity outside training mode or when rate == 0.
Var dropout(Var x, float rate);

// out[i] = table[ids[i]]; gradients scatter-add into the table.
Var gather_rows(Var table, std::span<const std::int32_t> ids);
// Copy of base with rows[idx[i]] replaced by values[i].
Var scatter_rows(Var base, std::span<const std::int32_t> idx, Var values);
// Elementwise max over the valid rows of consecutive groups of group_size
// rows. Every group needs at least one valid row.
Var max_pool_groups(Var x, std::size_t group_size,
                    std::span<const std::uint8_t> valid);
Var reshape(Var x, Shape shape);

// Mean negative log-likelihood over targets != ignore_index.
// Throws EmptyBatchError when every position is ignored.
Var cross_entropy(Var logits, std::span<const std::int32_t> targets,
                  int ignore_index = kIgnoreIndex);
// Mean |pred - target| (or squared) over rows with mask != 0.
Var l1_loss(Var pred, std::span<const float> target,
            std::span<const std::uint8_t> mask);
Var mse_loss(Var pred, std::span<const float> target,
             std::span<const std::uint8_t> mask);

}  // namespace hatkit::ops

#endif  // HATKIT_OPS_H_
