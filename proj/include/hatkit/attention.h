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

#ifndef HATKIT_ATTENTION_H_
#define HATKIT_ATTENTION_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "hatkit/graph.h"

namespace hatkit {

// Which query/key pairs of a multi-head attention call exist.
//
// Rows of q/k/v are split into consecutive groups of group_size rows; rows
// only ever attend within their own group. A dense pattern evaluates every
// pair of the group (optionally with a shared pair mask applied additively as
// -inf); a sparse pattern evaluates only the listed keys of each query.
// key_valid masks padding keys in both cases. A query with no admissible key
// produces a zero output row.
struct AttentionPattern {
  struct Sparse {
    // CSR over the rows of one group: keys of local row r are
    // cols[row_ptr[r] .. row_ptr[r + 1]).
    std::vector<std::uint32_t> row_ptr;
    std::vector<std::uint32_t> cols;
  };

  std::size_t group_size = 0;
  std::vector<std::uint8_t> key_valid;
  // Dense only: optional group_size x group_size mask, 1 = allowed; either
  // one shared mask or one per group, concatenated.
  std::vector<std::uint8_t> pair_allowed;
  // Sparse only: one entry per group (or a single shared entry).
  std::vector<Sparse> sparse;

  bool is_sparse() const { return !sparse.empty(); }
  const Sparse& sparse_for_group(std::size_t g) const {
    return sparse.size() == 1 ? sparse[0] : sparse[g];
  }

  static AttentionPattern dense(std::size_t group_size,
                                std::vector<std::uint8_t> key_valid);
};

// Counts query/key logits evaluated by attention() while in scope, per
// query/key pair (heads are not multiplied in). Scopes nest; the innermost
// active counter on the current thread receives the counts.
class ScoreCounter {
 public:
  ScoreCounter();
  ~ScoreCounter();
  ScoreCounter(const ScoreCounter&) = delete;
  ScoreCounter& operator=(const ScoreCounter&) = delete;

  std::uint64_t count() const { return count_; }
  static void record(std::uint64_t n);

 private:
  std::uint64_t count_ = 0;
  ScoreCounter* previous_;
};

namespace ops {

// Scaled dot-product attention over `heads` heads; q, k, v are
// [rows x H] with H divisible by heads. dropout_rate applies to the
// attention probabilities in training mode.
Var attention(Var q, Var k, Var v, std::shared_ptr<const AttentionPattern> pattern,
              std::size_t heads, float dropout_rate);

}  // namespace ops
}  // namespace hatkit

#endif  // HATKIT_ATTENTION_H_
