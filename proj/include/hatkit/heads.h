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

#ifndef HATKIT_HEADS_H_
#define HATKIT_HEADS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "hatkit/graph.h"
#include "hatkit/hat_model.h"
#include "hatkit/param_store.h"
#include "hatkit/random.h"

namespace hatkit {

// Every head owns a projection PR (H x H, followed by tanh) shared by all of
// its uses, and a classifier (H x L). Tensors live under
// <prefix>.pr.{weight,bias} and <prefix>.cls.{weight,bias}.
void add_head_params(ParamStore& store, const std::string& prefix, std::size_t hidden,
                     std::size_t labels, Rng& rng);
// tanh(x W + b) with the head's PR.
Var projection(Graph& g, const ParamStore& store, const std::string& prefix, Var x);

// Per-token logits [B*N*K x L].
Var token_head(Graph& g, const ParamStore& store, const std::string& prefix,
               const EncoderOutput& enc);
// Per-segment outputs [B*N x L].
Var segment_head(Graph& g, const ParamStore& store, const std::string& prefix,
                 const EncoderOutput& enc);
// classifier(PR(max over valid segments of PR(segment))), [B x L]. A
// document without valid segments throws ContractError.
Var document_head(Graph& g, const ParamStore& store, const std::string& prefix,
                  const EncoderOutput& enc);
// classifier(PR(last valid segment)), [B x L]; the hypothesis segment is the
// final non-pad one.
Var nli_head(Graph& g, const ParamStore& store, const std::string& prefix,
             const EncoderOutput& enc);
// enc encodes B = questions * choices documents, choice-major within each
// question, each ending with its choice segment. Returns [questions x
// choices] scores from a scalar scorer (L = 1) over the last valid segment.
Var mcqa_head(Graph& g, const ParamStore& store, const std::string& prefix,
              const EncoderOutput& enc, std::size_t choices, std::size_t expected_choices = 5);

// Row index of the last valid segment of every document.
std::vector<std::int32_t> last_valid_segment_rows(const EncoderOutput& enc);

// MLM head: logits = tanh(PR(x)) E^T + b with E the word-embedding table
// when tied, otherwise a separate <prefix>.decoder.weight [H x V].
void add_mlm_head_params(ParamStore& store, const std::string& prefix, std::size_t hidden,
                         std::size_t vocab, bool tied, Rng& rng);
Var mlm_logits(Graph& g, const ParamStore& store, const std::string& prefix, Var reps,
               const std::string& word_table, bool tied);

}  // namespace hatkit

#endif  // HATKIT_HEADS_H_
