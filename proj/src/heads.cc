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

#include "hatkit/heads.h"

#include "hatkit/error.h"
#include "hatkit/ops.h"
#include "hatkit/transformer.h"

namespace hatkit {
namespace {

Var classify(Graph& g, const ParamStore& store, const std::string& prefix, Var x) {
  return apply_linear(g, store, prefix + ".cls", projection(g, store, prefix, x));
}

}  // namespace

void add_head_params(ParamStore& store, const std::string& prefix, std::size_t hidden,
                     std::size_t labels, Rng& rng) {
  if (labels == 0) throw ConfigError("head " + prefix + " needs at least one output");
  add_linear_params(store, prefix + ".pr", hidden, hidden, rng);
  add_linear_params(store, prefix + ".cls", hidden, labels, rng);
}

Var projection(Graph& g, const ParamStore& store, const std::string& prefix, Var x) {
  return ops::tanh(apply_linear(g, store, prefix + ".pr", x));
}

Var token_head(Graph& g, const ParamStore& store, const std::string& prefix,
               const EncoderOutput& enc) {
  return classify(g, store, prefix, enc.tokens);
}

Var segment_head(Graph& g, const ParamStore& store, const std::string& prefix,
                 const EncoderOutput& enc) {
  return classify(g, store, prefix, enc.segments);
}

Var document_head(Graph& g, const ParamStore& store, const std::string& prefix,
                  const EncoderOutput& enc) {
  const Var projected = projection(g, store, prefix, enc.segments);
  const Var pooled = ops::max_pool_groups(projected, enc.N, enc.segment_valid);
  return classify(g, store, prefix, pooled);
}

std::vector<std::int32_t> last_valid_segment_rows(const EncoderOutput& enc) {
  std::vector<std::int32_t> rows(enc.B);
  for (std::size_t b = 0; b < enc.B; ++b) {
    std::size_t i = enc.N;
    while (i > 0 && !enc.segment_valid[b * enc.N + i - 1]) --i;
    if (i == 0) throw ContractError("document without a valid segment");
    rows[b] = static_cast<std::int32_t>(b * enc.N + i - 1);
  }
  return rows;
}

Var nli_head(Graph& g, const ParamStore& store, const std::string& prefix,
             const EncoderOutput& enc) {
  return classify(g, store, prefix, ops::gather_rows(enc.segments, last_valid_segment_rows(enc)));
}

Var mcqa_head(Graph& g, const ParamStore& store, const std::string& prefix,
              const EncoderOutput& enc, std::size_t choices, std::size_t expected_choices) {
  if (choices != expected_choices) {
    throw ContractError("expected " + std::to_string(expected_choices) + " choices, got " +
                        std::to_string(choices));
  }
  if (enc.B % choices != 0) throw ContractError("batch size is not a multiple of the choice count");
  if (store.value(prefix + ".cls.weight").dim(1) != 1) throw ContractError("MCQA scorer must have one output");
  const Var scores = classify(g, store, prefix, ops::gather_rows(enc.segments, last_valid_segment_rows(enc)));
  return ops::reshape(scores, {enc.B / choices, choices});
}

void add_mlm_head_params(ParamStore& store, const std::string& prefix, std::size_t hidden,
                         std::size_t vocab, bool tied, Rng& rng) {
  add_linear_params(store, prefix + ".pr", hidden, hidden, rng);
  if (!tied) store.add(prefix + ".decoder.weight", truncated_normal({hidden, vocab}, kInitStd, rng));
  store.add(prefix + ".out.bias", Tensor({vocab}, 0.0f));
}

Var mlm_logits(Graph& g, const ParamStore& store, const std::string& prefix, Var reps,
               const std::string& word_table, bool tied) {
  const Var h = projection(g, store, prefix, reps);
  const Var logits = tied ? ops::matmul_transposed(h, g.param(store, word_table))
                          : ops::matmul(h, g.param(store, prefix + ".decoder.weight"));
  return ops::add_row(logits, g.param(store, prefix + ".out.bias"));
}

}  // namespace hatkit
