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

#include "hatkit/hat_model.h"

#include <algorithm>
#include <map>
#include <memory>

#include "hatkit/error.h"
#include "hatkit/heads.h"
#include "hatkit/ops.h"

namespace hatkit {
namespace {

constexpr LayerKind SW = LayerKind::kSW;
constexpr LayerKind CS = LayerKind::kCS;

Layout repeat(const Layout& unit, std::size_t times) {
  Layout out;
  for (std::size_t i = 0; i < times; ++i) out.insert(out.end(), unit.begin(), unit.end());
  return out;
}

Layout concat(Layout a, const Layout& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::map<std::string, Layout, std::less<>>& registry() {
  static const std::map<std::string, Layout, std::less<>> kLayouts = {
      {"AH1", concat(repeat({SW}, 6), repeat({CS}, 6))},
      {"AH2", concat(repeat({SW}, 8), repeat({CS}, 4))},
      {"I1", repeat({SW, CS}, 6)},
      {"I2", repeat({SW, SW, CS, CS}, 3)},
      {"I3", repeat({SW, SW, CS}, 4)},
      {"I4", repeat({SW, SW, SW, CS}, 3)},
      {"EC1", concat(repeat({SW, CS}, 3), repeat({SW}, 6))},
      {"EC2", concat(repeat({SW, SW, CS, CS}, 2), repeat({SW}, 4))},
      {"LC1", concat(repeat({SW}, 7), {CS, SW, CS, SW, CS})},
      {"LC2", concat(repeat({SW}, 6), {CS, CS, SW, SW, CS, CS})},
      {"L16-I3", repeat({SW, SW, SW, CS}, 4)},
  };
  return kLayouts;
}

std::string trim_copy(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Layout layout_by_name(std::string_view name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw LookupError("unknown layout: " + std::string(name));
  return it->second;
}

const std::vector<std::string>& layout_names() {
  static const std::vector<std::string> kNames = {"AH1", "AH2", "I1",  "I2",  "I3",    "I4",
                                                  "EC1", "EC2", "LC1", "LC2", "L16-I3"};
  return kNames;
}

std::string layout_string(const Layout& layout) {
  std::string out;
  for (LayerKind kind : layout) {
    if (!out.empty()) out += ',';
    out += kind == SW ? "SW" : "CS";
  }
  return out;
}

Layout parse_layout(std::string_view text) {
  if (registry().count(text)) return layout_by_name(text);
  Layout out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = trim_copy(text.substr(start, comma - start));
    if (item == "SW") {
      out.push_back(SW);
    } else if (item == "CS") {
      out.push_back(CS);
    } else {
      throw ConfigError("bad layout '" + std::string(text) + "': expected a layout name or SW/CS list");
    }
    start = comma + 1;
  }
  return out;
}

std::size_t count_layers(const Layout& layout, LayerKind kind) {
  return static_cast<std::size_t>(std::count(layout.begin(), layout.end(), kind));
}

void HatConfig::validate() const {
  if (hidden == 0 || heads == 0 || hidden % heads != 0) {
    throw ConfigError("hidden size " + std::to_string(hidden) + " must be a positive multiple of heads " +
                      std::to_string(heads));
  }
  if (ffn == 0) throw ConfigError("ffn size must be positive");
  if (vocab <= static_cast<std::size_t>(SpecialTokens::kCount)) {
    throw ConfigError("vocabulary must hold more than the special tokens");
  }
  if (K < 2) throw ConfigError("segment length K must be >= 2");
  if (n_max < 1) throw ConfigError("N_max must be >= 1");
  if (layout.empty()) throw ConfigError("layout must not be empty");
  if (layout.front() != SW) throw ConfigError("layout must start with a segment-wise layer");
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw ConfigError("dropout must lie in [0, 1)");
}

HatBatch HatBatch::from_documents(std::span<const SegmentedDocument> docs, std::size_t N) {
  if (docs.empty()) throw EmptyBatchError("batch without documents");
  HatBatch batch;
  batch.B = docs.size();
  batch.K = docs.front().K;
  std::size_t longest = 0;
  for (const auto& d : docs) {
    if (d.K != batch.K) throw ContractError("documents in a batch must share K");
    longest = std::max(longest, d.N);
  }
  batch.N = N ? N : longest;
  if (batch.N == 0) throw EmptyBatchError("batch of empty documents");
  if (longest > batch.N) throw ContractError("document longer than the batch segment count");
  const std::size_t doc_size = batch.N * batch.K;
  batch.ids.assign(batch.B * doc_size, SpecialTokens::kPad);
  batch.valid.assign(batch.B * doc_size, 0);
  for (std::size_t b = 0; b < batch.B; ++b) {
    std::copy(docs[b].ids.begin(), docs[b].ids.end(), batch.ids.begin() + b * doc_size);
    std::copy(docs[b].valid.begin(), docs[b].valid.end(), batch.valid.begin() + b * doc_size);
  }
  return batch;
}

std::vector<std::uint8_t> HatBatch::segment_mask() const {
  std::vector<std::uint8_t> mask(B * N);
  for (std::size_t r = 0; r < B * N; ++r) mask[r] = valid[r * K];
  return mask;
}

void HatBatch::check(const HatConfig& config) const {
  if (B == 0 || N == 0) throw ContractError("empty batch");
  if (K != config.K) {
    throw ContractError("batch K " + std::to_string(K) + " differs from model K " + std::to_string(config.K));
  }
  if (N > config.n_max) {
    throw ContractError("batch has " + std::to_string(N) + " segments, model allows " +
                        std::to_string(config.n_max));
  }
  const std::size_t rows = B * N * K;
  if (ids.size() != rows || valid.size() != rows || (!types.empty() && types.size() != rows)) {
    throw ContractError("batch arrays do not match B x N x K");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= config.vocab) {
      throw ContractError("token id " + std::to_string(ids[r]) + " outside the vocabulary");
    }
    if (!valid[r] && ids[r] != SpecialTokens::kPad) throw ContractError("masked position holds a non-pad token");
    if (valid[r] && !valid[r - r % K]) throw ContractError("valid token in a segment without a valid CLS");
    if (!types.empty() && (types[r] < 0 || types[r] > 1)) throw ContractError("token type must be 0 or 1");
  }
}

std::string hat_block_prefix(const Layout& layout, std::size_t index) {
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < index; ++i) ordinal += layout[i] == layout[index] ? 1 : 0;
  return (layout[index] == SW ? "sw." : "cs.") + std::to_string(ordinal);
}

ParamStore init_hat(const HatConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore store;
  const std::size_t h = config.hidden;
  store.add("embeddings.word", truncated_normal({config.vocab, h}, kInitStd, rng));
  store.add("embeddings.sw_position", truncated_normal({config.K, h}, kInitStd, rng));
  store.add("embeddings.cs_position", truncated_normal({config.n_max, h}, kInitStd, rng));
  store.add("embeddings.type", truncated_normal({2, h}, kInitStd, rng));
  for (std::size_t l = 0; l < config.layout.size(); ++l) {
    add_block_params(store, hat_block_prefix(config.layout, l), config.block_dims(), rng);
  }
  add_mlm_head_params(store, "mlm", h, config.vocab, config.tie_mlm, rng);
  return store;
}

EncoderOutput hat_forward(Graph& g, const ParamStore& params, const HatConfig& config,
                          const HatBatch& batch, bool keep_layers) {
  batch.check(config);
  const std::size_t B = batch.B, N = batch.N, K = batch.K;
  const std::size_t rows = B * N * K;

  std::vector<std::int32_t> positions(rows);
  for (std::size_t r = 0; r < rows; ++r) positions[r] = static_cast<std::int32_t>(r % K);
  const std::vector<std::int32_t> zeros(batch.types.empty() ? rows : 0, 0);
  const std::span<const std::int32_t> types = batch.types.empty() ? zeros : batch.types;

  Var x = ops::gather_rows(g.param(params, "embeddings.word"), batch.ids);
  x = ops::add(x, ops::gather_rows(g.param(params, "embeddings.sw_position"), positions));
  x = ops::add(x, ops::gather_rows(g.param(params, "embeddings.type"), types));

  std::vector<std::int32_t> cls_rows(B * N), cs_positions(B * N);
  for (std::size_t s = 0; s < B * N; ++s) {
    cls_rows[s] = static_cast<std::int32_t>(s * K);
    cs_positions[s] = static_cast<std::int32_t>(s % N);
  }
  EncoderOutput out;
  out.B = B;
  out.N = N;
  out.K = K;
  out.segment_valid = batch.segment_mask();

  const auto sw_pattern = std::make_shared<const AttentionPattern>(AttentionPattern::dense(K, batch.valid));
  const auto cs_pattern = std::make_shared<const AttentionPattern>(AttentionPattern::dense(N, out.segment_valid));

  for (std::size_t l = 0; l < config.layout.size(); ++l) {
    const std::string prefix = hat_block_prefix(config.layout, l);
    if (config.layout[l] == SW) {
      x = block_forward(g, params, prefix, x, sw_pattern, config.heads, config.dropout);
    } else {
      Var cls = ops::gather_rows(x, cls_rows);
      cls = ops::add(cls, ops::gather_rows(g.param(params, "embeddings.cs_position"), cs_positions));
      cls = block_forward(g, params, prefix, cls, cs_pattern, config.heads, config.dropout);
      x = ops::scatter_rows(x, cls_rows, cls);
    }
    if (keep_layers) out.layers.push_back(x);
  }
  out.tokens = x;
  out.segments = ops::gather_rows(x, cls_rows);
  return out;
}

AttentionCost attention_cost(const HatConfig& config, std::size_t N, std::size_t K) {
  if (N > config.n_max) throw ContractError("N exceeds N_max");
  AttentionCost cost;
  const BlockDims dims = config.block_dims();
  for (LayerKind kind : config.layout) {
    const std::uint64_t scores = kind == SW ? static_cast<std::uint64_t>(N) * K * K
                                            : static_cast<std::uint64_t>(N) * N;
    const double rows = kind == SW ? static_cast<double>(N * K) : static_cast<double>(N);
    cost.score_count += scores;
    cost.flop_estimate += block_flops(dims, rows, static_cast<double>(scores));
  }
  return cost;
}

}  // namespace hatkit
