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

#include "hatkit/baseline_models.h"

#include <algorithm>

#include "hatkit/error.h"
#include "hatkit/heads.h"
#include "hatkit/ops.h"
#include "hatkit/vocab.h"

namespace hatkit {

void FlatConfig::validate() const {
  if (hidden == 0 || heads == 0 || hidden % heads != 0) {
    throw ConfigError("hidden size must be a positive multiple of heads");
  }
  if (ffn == 0 || layers == 0 || max_positions == 0) {
    throw ConfigError("ffn, layers and max_positions must be positive");
  }
  if (vocab <= static_cast<std::size_t>(SpecialTokens::kCount)) {
    throw ConfigError("vocabulary must hold more than the special tokens");
  }
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw ConfigError("dropout must lie in [0, 1)");
}

std::string flat_block_prefix(std::size_t layer) { return "layer." + std::to_string(layer); }

ParamStore init_flat(const FlatConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore store;
  const std::size_t h = config.hidden;
  store.add("embeddings.word", truncated_normal({config.vocab, h}, kInitStd, rng));
  store.add("embeddings.position", truncated_normal({config.max_positions, h}, kInitStd, rng));
  store.add("embeddings.type", truncated_normal({2, h}, kInitStd, rng));
  for (std::size_t l = 0; l < config.layers; ++l) {
    add_block_params(store, flat_block_prefix(l), config.block_dims(), rng);
  }
  add_mlm_head_params(store, "mlm", h, config.vocab, config.tie_mlm, rng);
  return store;
}

FlatBatch FlatBatch::from_grid(const HatBatch& grid, std::size_t T) {
  FlatBatch out;
  out.B = grid.B;
  out.T = T ? T : grid.N * grid.K;
  const std::size_t rows = out.B * out.T;
  out.ids.assign(rows, SpecialTokens::kPad);
  out.valid.assign(rows, 0);
  out.global.assign(rows, 0);
  if (!grid.types.empty()) out.types.assign(rows, 0);
  out.grid_to_flat.assign(grid.ids.size(), -1);
  for (std::size_t b = 0; b < grid.B; ++b) {
    std::size_t t = 0;
    bool first = true;
    for (std::size_t i = 0; i < grid.N; ++i) {
      if (!grid.segment_valid(b, i)) continue;
      for (std::size_t j = 0; j < grid.K; ++j) {
        const std::size_t src = (b * grid.N + i) * grid.K + j;
        if (!grid.valid[src]) continue;
        if (t >= out.T) throw ContractError("flattened document exceeds T = " + std::to_string(out.T));
        const std::size_t dst = b * out.T + t;
        if (j == 0) {
          out.ids[dst] = first ? SpecialTokens::kCls : SpecialTokens::kSep;
          out.global[dst] = 1;
          first = false;
        } else {
          out.ids[dst] = grid.ids[src];
        }
        out.valid[dst] = 1;
        if (!grid.types.empty()) out.types[dst] = grid.types[src];
        out.grid_to_flat[src] = static_cast<std::int32_t>(dst);
        ++t;
      }
    }
  }
  return out;
}

FlatBatch FlatBatch::from_sequences(const std::vector<std::vector<std::int32_t>>& sequences,
                                    std::size_t T) {
  if (sequences.empty()) throw EmptyBatchError("batch without sequences");
  FlatBatch out;
  out.B = sequences.size();
  std::size_t longest = 0;
  for (const auto& s : sequences) longest = std::max(longest, s.size());
  out.T = T ? T : longest;
  if (out.T == 0) throw EmptyBatchError("batch of empty sequences");
  if (longest > out.T) throw ContractError("sequence longer than T");
  out.ids.assign(out.B * out.T, SpecialTokens::kPad);
  out.valid.assign(out.B * out.T, 0);
  out.global.assign(out.B * out.T, 0);
  for (std::size_t b = 0; b < out.B; ++b) {
    for (std::size_t t = 0; t < sequences[b].size(); ++t) {
      out.ids[b * out.T + t] = sequences[b][t];
      out.valid[b * out.T + t] = 1;
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> window_span(std::size_t q, std::size_t T, std::size_t window) {
  if (window + 1 >= T) return {0, T - 1};
  const std::size_t half = window / 2;
  const std::size_t lo = std::min(q > half ? q - half : 0, T - 1 - window);
  return {lo, lo + window};
}

std::shared_ptr<const AttentionPattern> make_flat_pattern(const FlatBatch& batch,
                                                          const FlatAttention& attention) {
  const std::size_t T = batch.T;
  if (attention.mode == AttentionMode::kDense) {
    return std::make_shared<const AttentionPattern>(AttentionPattern::dense(T, batch.valid));
  }
  auto pattern = std::make_shared<AttentionPattern>(AttentionPattern::dense(T, batch.valid));
  const std::size_t W = attention.window.window;
  const bool masked = attention.mode == AttentionMode::kWindowMasked;
  if (masked) pattern->pair_allowed.assign(batch.B * T * T, 0);
  for (std::size_t b = 0; b < batch.B; ++b) {
    const std::uint8_t* global = batch.global.data() + b * T;
    std::vector<std::uint32_t> global_cols;
    if (attention.window.use_globals) {
      for (std::size_t t = 0; t < T; ++t) {
        if (global[t]) global_cols.push_back(static_cast<std::uint32_t>(t));
      }
    }
    AttentionPattern::Sparse sp;
    sp.row_ptr.reserve(T + 1);
    sp.row_ptr.push_back(0);
    for (std::size_t q = 0; q < T; ++q) {
      const std::size_t row_start = sp.cols.size();
      if (attention.window.use_globals && global[q]) {
        for (std::size_t k = 0; k < T; ++k) sp.cols.push_back(static_cast<std::uint32_t>(k));
      } else {
        const auto [lo, hi] = window_span(q, T, W);
        auto g = global_cols.begin();
        for (; g != global_cols.end() && *g < lo; ++g) sp.cols.push_back(*g);
        for (std::size_t k = lo; k <= hi; ++k) sp.cols.push_back(static_cast<std::uint32_t>(k));
        for (; g != global_cols.end(); ++g) {
          if (*g > hi) sp.cols.push_back(*g);
        }
      }
      if (masked) {
        std::uint8_t* row = pattern->pair_allowed.data() + (b * T + q) * T;
        for (std::size_t c = row_start; c < sp.cols.size(); ++c) row[sp.cols[c]] = 1;
      }
      sp.row_ptr.push_back(static_cast<std::uint32_t>(sp.cols.size()));
    }
    if (!masked) pattern->sparse.push_back(std::move(sp));
  }
  return pattern;
}

Var flat_forward(Graph& g, const ParamStore& params, const FlatConfig& config,
                 const FlatBatch& batch, const FlatAttention& attention, std::vector<Var>* layers) {
  if (batch.T > config.max_positions) {
    throw ContractError("sequence length " + std::to_string(batch.T) + " exceeds " +
                        std::to_string(config.max_positions) + " positions");
  }
  const std::size_t rows = batch.B * batch.T;
  if (batch.ids.size() != rows || batch.valid.size() != rows) {
    throw ContractError("batch arrays do not match B x T");
  }
  if (attention.mode != AttentionMode::kDense && batch.global.size() != rows) {
    throw ContractError("window attention needs the global-token mask");
  }
  for (std::int32_t id : batch.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab) throw ContractError("token id outside the vocabulary");
  }
  std::vector<std::int32_t> positions(rows);
  for (std::size_t r = 0; r < rows; ++r) positions[r] = static_cast<std::int32_t>(r % batch.T);
  const std::vector<std::int32_t> zeros(batch.types.empty() ? rows : 0, 0);
  const std::span<const std::int32_t> types = batch.types.empty() ? zeros : batch.types;

  Var x = ops::gather_rows(g.param(params, "embeddings.word"), batch.ids);
  x = ops::add(x, ops::gather_rows(g.param(params, "embeddings.position"), positions));
  x = ops::add(x, ops::gather_rows(g.param(params, "embeddings.type"), types));
  const auto pattern = make_flat_pattern(batch, attention);
  for (std::size_t l = 0; l < config.layers; ++l) {
    x = block_forward(g, params, flat_block_prefix(l), x, pattern, config.heads, config.dropout);
    if (layers) layers->push_back(x);
  }
  return x;
}

std::uint64_t window_cost(const WindowConfig& window, std::size_t layers, std::size_t T,
                          std::span<const std::size_t> global_positions) {
  std::vector<std::size_t> globals;
  if (window.use_globals) {
    globals.assign(global_positions.begin(), global_positions.end());
    std::sort(globals.begin(), globals.end());
    globals.erase(std::unique(globals.begin(), globals.end()), globals.end());
    if (!globals.empty() && globals.back() >= T) throw ContractError("global position beyond T");
  }
  const std::uint64_t G = globals.size();
  const std::uint64_t local = std::min<std::uint64_t>(T, window.window + 1);
  // Global rows see all T keys; every other row sees its local span plus the
  // global columns outside it.
  std::uint64_t per_layer = G * T;
  std::size_t next_global = 0;
  for (std::size_t q = 0; q < T; ++q) {
    if (next_global < globals.size() && globals[next_global] == q) {
      ++next_global;
      continue;
    }
    const auto [lo, hi] = window_span(q, T, window.window);
    const auto inside = std::upper_bound(globals.begin(), globals.end(), hi) -
                        std::lower_bound(globals.begin(), globals.end(), lo);
    per_layer += local + G - static_cast<std::uint64_t>(inside);
  }
  return per_layer * layers;
}

std::vector<std::size_t> flat_global_positions(std::size_t N, std::size_t K) {
  std::vector<std::size_t> out(N);
  for (std::size_t i = 0; i < N; ++i) out[i] = i * K;
  return out;
}

}  // namespace hatkit
