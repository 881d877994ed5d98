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

#include <gtest/gtest.h>

#include <numeric>

#include "hatkit/attention.h"
#include "hatkit/baseline_models.h"
#include "hatkit/error.h"
#include "hatkit/finite_difference.h"
#include "hatkit/ops.h"
#include "reference_model.h"
#include "test_util.h"

namespace hatkit {
namespace {

using testing::max_abs_diff;
using testing::random_batch;
using testing::tiny_config;

TEST(LayoutRegistry, GoldenSequences) {
  const std::map<std::string, std::string> golden = {
      {"AH1", "SW,SW,SW,SW,SW,SW,CS,CS,CS,CS,CS,CS"},
      {"AH2", "SW,SW,SW,SW,SW,SW,SW,SW,CS,CS,CS,CS"},
      {"I1", "SW,CS,SW,CS,SW,CS,SW,CS,SW,CS,SW,CS"},
      {"I2", "SW,SW,CS,CS,SW,SW,CS,CS,SW,SW,CS,CS"},
      {"I3", "SW,SW,CS,SW,SW,CS,SW,SW,CS,SW,SW,CS"},
      {"I4", "SW,SW,SW,CS,SW,SW,SW,CS,SW,SW,SW,CS"},
      {"EC1", "SW,CS,SW,CS,SW,CS,SW,SW,SW,SW,SW,SW"},
      {"EC2", "SW,SW,CS,CS,SW,SW,CS,CS,SW,SW,SW,SW"},
      {"LC1", "SW,SW,SW,SW,SW,SW,SW,CS,SW,CS,SW,CS"},
      {"LC2", "SW,SW,SW,SW,SW,SW,CS,CS,SW,SW,CS,CS"},
      {"L16-I3", "SW,SW,SW,CS,SW,SW,SW,CS,SW,SW,SW,CS,SW,SW,SW,CS"},
  };
  ASSERT_EQ(layout_names().size(), golden.size());
  for (const std::string& name : layout_names()) {
    ASSERT_TRUE(golden.count(name)) << name;
    EXPECT_EQ(layout_string(layout_by_name(name)), golden.at(name)) << name;
  }
}

TEST(LayoutRegistry, SegmentWiseCountsMatchTable) {
  const std::map<std::string, std::size_t> swe = {{"AH1", 6}, {"AH2", 8}, {"I1", 6},  {"I2", 6},
                                                  {"I3", 8},  {"I4", 9},  {"EC1", 9}, {"EC2", 8},
                                                  {"LC1", 9}, {"LC2", 8}, {"L16-I3", 12}};
  for (const auto& [name, n] : swe) EXPECT_EQ(count_layers(layout_by_name(name), LayerKind::kSW), n) << name;
}

TEST(LayoutRegistry, ParseAndErrors) {
  EXPECT_THROW(layout_by_name("I5"), LookupError);
  EXPECT_EQ(parse_layout("SW, CS,SW"), (Layout{LayerKind::kSW, LayerKind::kCS, LayerKind::kSW}));
  EXPECT_EQ(parse_layout("I3"), layout_by_name("I3"));
  EXPECT_THROW(parse_layout("SW,XX"), ConfigError);
  EXPECT_THROW(parse_layout(""), ConfigError);
}

TEST(HatConfig, Validation) {
  auto c = tiny_config({LayerKind::kSW});
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.heads = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.K = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.layout = {LayerKind::kCS, LayerKind::kSW};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.layout = {};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(HatInit, DeterministicPerSeed) {
  const auto c = tiny_config(layout_by_name("I1"));
  EXPECT_TRUE(init_hat(c, 7) == init_hat(c, 7));
  EXPECT_FALSE(init_hat(c, 7) == init_hat(c, 8));
}

TEST(HatInit, NormsAndBiases) {
  const auto c = tiny_config(layout_by_name("I3"));
  const ParamStore p = init_hat(c, 1);
  for (const std::string& name : p.names()) {
    const Tensor& t = p.value(name);
    const bool gain = name.ends_with(".gain");
    const bool bias = name.ends_with(".bias");
    for (float v : t.values()) {
      if (gain) {
        ASSERT_EQ(v, 1.0f) << name;
      } else if (bias) {
        ASSERT_EQ(v, 0.0f) << name;
      } else {
        ASSERT_LE(std::abs(v), 2.0f * kInitStd) << name;
      }
    }
  }
  EXPECT_TRUE(p.contains("embeddings.cs_position"));
  EXPECT_EQ(p.value("embeddings.cs_position").shape(), (Shape{c.n_max, c.hidden}));
}

TEST(HatInit, MiniHatParameterCount) {
  HatConfig c;
  c.layout = layout_by_name("I1");
  // Shape walk: embeddings, 12 blocks, tied MLM head.
  const std::size_t H = 256, F = 1024, V = 30522, K = 128, N = 8;
  const std::size_t linear_hh = H * H + H;
  const std::size_t block = 4 * linear_hh + 2 * H + (H * F + F) + (F * H + H) + 2 * H;
  const std::size_t expected = V * H + K * H + N * H + 2 * H + 12 * block + linear_hh + V;
  EXPECT_EQ(init_hat(c, 0).parameter_count(), expected);
}

TEST(HatForward, OutputShapes) {
  const auto c = tiny_config(layout_by_name("I1"));
  const auto params = init_hat(c, 3);
  const auto batch = random_batch(c, 2, 3, 11);
  Graph g;
  const auto out = hat_forward(g, params, c, batch);
  EXPECT_EQ(out.tokens.shape(), (Shape{2 * 3 * 8, 16}));
  EXPECT_EQ(out.segments.shape(), (Shape{6, 16}));
  for (std::size_t s = 0; s < 6; ++s) {
    for (std::size_t h = 0; h < 16; ++h) {
      EXPECT_EQ(out.segments.value().at(s, h), out.tokens.value().at(s * 8, h));
    }
  }
}

TEST(HatForward, ContractErrors) {
  const auto c = tiny_config(layout_by_name("I1"));
  const auto params = init_hat(c, 3);
  Graph g;
  auto batch = random_batch(c, 1, 2, 1);
  batch.ids[1] = 1000;
  EXPECT_THROW(hat_forward(g, params, c, batch), ContractError);
  batch = random_batch(c, 1, 5, 1);
  EXPECT_THROW(hat_forward(g, params, c, batch), ContractError);
  batch = random_batch(c, 1, 2, 1);
  batch.valid[7] = 0;
  batch.ids[7] = 9;
  EXPECT_THROW(hat_forward(g, params, c, batch), ContractError);
}

Tensor tokens_of(const HatConfig& c, const ParamStore& p, const HatBatch& b) {
  Graph g;
  return hat_forward(g, p, c, b).tokens.value();
}

TEST(HatForward, AdHocLayoutsIsolateSegments) {
  for (const char* name : {"AH1", "AH2"}) {
    const auto c = tiny_config(layout_by_name(name));
    const auto params = init_hat(c, 5);
    const auto batch = random_batch(c, 1, 3, 21, /*full=*/true);
    const Tensor base = tokens_of(c, params, batch);
    for (std::size_t j = 0; j < 3; ++j) {
      auto changed = batch;
      changed.ids[j * c.K + 3] = changed.ids[j * c.K + 3] == 10 ? 11 : 10;
      const Tensor out = tokens_of(c, params, changed);
      bool own_changed = false;
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t t = 1; t < c.K; ++t) {
          for (std::size_t h = 0; h < c.hidden; ++h) {
            const std::size_t r = i * c.K + t;
            if (i != j) {
              ASSERT_EQ(out.at(r, h), base.at(r, h)) << name << " segment " << i;
            } else {
              own_changed = own_changed || out.at(r, h) != base.at(r, h);
            }
          }
        }
      }
      EXPECT_TRUE(own_changed);
    }
  }
}

TEST(HatForward, InterleavedLayoutsPropagateAcrossSegments) {
  for (const char* name : {"I1", "I2", "I3", "I4"}) {
    const auto c = tiny_config(layout_by_name(name));
    const auto params = init_hat(c, 6);
    const auto batch = random_batch(c, 1, 2, 22, /*full=*/true);
    auto changed = batch;
    for (std::size_t t = 1; t < c.K; ++t) changed.ids[c.K + t] = 5 + (changed.ids[c.K + t] - 4) % 30;
    Graph g1, g2;
    const auto a = hat_forward(g1, params, c, batch, true);
    const auto b = hat_forward(g2, params, c, changed, true);
    bool seen_cs = false, reached = false;
    for (std::size_t l = 0; l < c.layout.size(); ++l) {
      bool differs = false;
      for (std::size_t t = 1; t < c.K; ++t) {
        for (std::size_t h = 0; h < c.hidden; ++h) {
          differs = differs || a.layers[l].value().at(t, h) != b.layers[l].value().at(t, h);
        }
      }
      if (c.layout[l] == LayerKind::kCS) seen_cs = true;
      // Non-CLS tokens of segment 0 stay put until an SW layer follows a CS layer.
      if (!(seen_cs && c.layout[l] == LayerKind::kSW)) {
        if (!reached) {
          EXPECT_FALSE(differs) << name << " layer " << l;
        }
      } else {
        reached = reached || differs;
      }
    }
    EXPECT_TRUE(reached) << name;
  }
}

TEST(HatForward, ClsWriteBack) {
  const auto c = tiny_config(layout_by_name("I2"));
  const auto params = init_hat(c, 8);
  const auto batch = random_batch(c, 2, 3, 23, false, true);
  Graph g;
  const auto out = hat_forward(g, params, c, batch, true);
  const std::size_t rows = batch.B * batch.N;
  std::vector<std::int32_t> cls(rows), seg_pos(rows);
  for (std::size_t s = 0; s < rows; ++s) {
    cls[s] = static_cast<std::int32_t>(s * c.K);
    seg_pos[s] = static_cast<std::int32_t>(s % batch.N);
  }
  for (std::size_t l = 1; l < c.layout.size(); ++l) {
    if (c.layout[l] != LayerKind::kCS) continue;
    // Recompute the CS block independently from the previous grid.
    Graph h;
    Var prev = h.constant(out.layers[l - 1].value());
    Var x = ops::add(ops::gather_rows(prev, cls),
                     ops::gather_rows(h.param(params, "embeddings.cs_position"), seg_pos));
    auto pattern = std::make_shared<const AttentionPattern>(AttentionPattern::dense(batch.N, batch.segment_mask()));
    Var y = block_forward(h, params, hat_block_prefix(c.layout, l), x, pattern, c.heads, 0.0f);
    const Tensor& grid = out.layers[l].value();
    const Tensor& before = out.layers[l - 1].value();
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      for (std::size_t d = 0; d < c.hidden; ++d) {
        if (r % c.K == 0) {
          ASSERT_EQ(grid.at(r, d), y.value().at(r / c.K, d));
        } else {
          ASSERT_EQ(grid.at(r, d), before.at(r, d));
        }
      }
    }
  }
}

TEST(HatForward, PermutationCovariance) {
  const auto c = tiny_config(layout_by_name("I1"));
  const auto params = init_hat(c, 9);
  const auto batch = random_batch(c, 1, 4, 24);
  const std::vector<std::size_t> sigma = {2, 0, 3, 1};  // new slot t holds old segment sigma[t]
  HatBatch permuted = batch;
  ParamStore shifted = params;
  Tensor& cs = shifted.mutable_value("embeddings.cs_position");
  const Tensor& original = params.value("embeddings.cs_position");
  for (std::size_t t = 0; t < 4; ++t) {
    std::copy_n(batch.ids.begin() + sigma[t] * c.K, c.K, permuted.ids.begin() + t * c.K);
    std::copy_n(batch.valid.begin() + sigma[t] * c.K, c.K, permuted.valid.begin() + t * c.K);
    for (std::size_t h = 0; h < c.hidden; ++h) cs.at(t, h) = original.at(sigma[t], h);
  }
  Graph g1, g2;
  const auto a = hat_forward(g1, params, c, batch);
  const auto b = hat_forward(g2, shifted, c, permuted);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t h = 0; h < c.hidden; ++h) {
      EXPECT_NEAR(b.segments.value().at(t, h), a.segments.value().at(sigma[t], h), 1e-5f);
    }
  }
}

TEST(HatForward, PadSegmentDoesNotLeak) {
  const auto c = tiny_config(layout_by_name("I1"));
  const auto params = init_hat(c, 10);
  const auto one = random_batch(c, 1, 1, 25);
  HatBatch two = one;
  two.N = 2;
  two.ids.resize(2 * c.K, SpecialTokens::kPad);
  two.valid.resize(2 * c.K, 0);
  const Tensor a = tokens_of(c, params, one);
  const Tensor b = tokens_of(c, params, two);
  for (std::size_t r = 0; r < c.K; ++r) {
    for (std::size_t h = 0; h < c.hidden; ++h) EXPECT_NEAR(a.at(r, h), b.at(r, h), 1e-5f);
  }
}

TEST(HatForward, SingleSegmentWithoutCrossLayersIsFlat) {
  const auto c = tiny_config({LayerKind::kSW, LayerKind::kSW, LayerKind::kSW});
  const auto params = init_hat(c, 11);
  FlatConfig fc;
  fc.hidden = c.hidden;
  fc.heads = c.heads;
  fc.ffn = c.ffn;
  fc.vocab = c.vocab;
  fc.max_positions = c.K;
  fc.layers = 3;
  fc.dropout = 0.0f;
  ParamStore flat = init_flat(fc, 99);
  flat.set("embeddings.word", params.value("embeddings.word"));
  flat.set("embeddings.type", params.value("embeddings.type"));
  flat.set("embeddings.position", params.value("embeddings.sw_position"));
  for (std::size_t l = 0; l < 3; ++l) {
    for (const auto& suffix : block_param_suffixes()) {
      flat.set(flat_block_prefix(l) + "." + suffix, params.value("sw." + std::to_string(l) + "." + suffix));
    }
  }
  const auto batch = random_batch(c, 1, 1, 26);
  const Tensor hat = tokens_of(c, params, batch);
  std::vector<std::int32_t> seq;
  for (std::size_t t = 0; t < c.K && batch.valid[t]; ++t) seq.push_back(batch.ids[t]);
  Graph g;
  const Tensor ref = flat_forward(g, flat, fc, FlatBatch::from_sequences({seq}, c.K)).value();
  for (std::size_t t = 0; t < c.K; ++t) {
    if (!batch.valid[t]) continue;
    for (std::size_t h = 0; h < c.hidden; ++h) EXPECT_NEAR(hat.at(t, h), ref.at(t, h), 1e-5f);
  }
}

TEST(HatForward, DropoutIsSeededAndOffInEvaluation) {
  auto c = tiny_config(layout_by_name("I1"));
  c.dropout = 0.1f;
  const auto params = init_hat(c, 12);
  const auto batch = random_batch(c, 2, 2, 27);
  Graph t1(true, 5), t2(true, 5), t3(true, 6), e1, e2;
  EXPECT_EQ(hat_forward(t1, params, c, batch).tokens.value(), hat_forward(t2, params, c, batch).tokens.value());
  EXPECT_FALSE(hat_forward(t1, params, c, batch).tokens.value() ==
               hat_forward(t3, params, c, batch).tokens.value());
  EXPECT_EQ(hat_forward(e1, params, c, batch).tokens.value(), hat_forward(e2, params, c, batch).tokens.value());
}

class HatGradient : public ::testing::TestWithParam<int> {};

TEST_P(HatGradient, FullModelMatchesFiniteDifferences) {
  const std::uint64_t seed = static_cast<std::uint64_t>(GetParam());
  for (const Layout& layout : {Layout{LayerKind::kSW, LayerKind::kCS},
                               Layout{LayerKind::kSW, LayerKind::kCS, LayerKind::kSW, LayerKind::kCS}}) {
    const auto c = tiny_config(layout, 8, 2);
    const auto params = testing::rescaled(init_hat(c, seed), seed);
    const auto batch = random_batch(c, 1, 2, seed + 100);
    double gap = 0.0;
    const auto result = reference::check_against_reference(
        [&](Graph& g, const ParamStore& p) { return hat_forward(g, p, c, batch).tokens; },
        [&](const ParamStore& p) { return reference::hat_forward(p, c, batch).tokens; }, params, seed, &gap);
    EXPECT_LT(gap, 1e-5) << layout_string(layout);
    EXPECT_LT(result.max_relative_error, 1e-3) << layout_string(layout) << " worst " << result.worst_tensor;
  }
}

TEST(HatGradientStructure, KeyBiasGradientVanishes) {
  const auto c = tiny_config({LayerKind::kSW, LayerKind::kCS}, 8, 2);
  ParamStore params = testing::rescaled(init_hat(c, 3), 3);
  const auto batch = random_batch(c, 1, 2, 31);
  Graph g;
  const Var y = hat_forward(g, params, c, batch).tokens;
  Rng rng(4);
  Tensor w(y.shape());
  for (float& v : w.values()) v = static_cast<float>(uniform01(rng) - 0.5);
  g.backward(ops::sum(ops::mul(y, g.constant(w))));
  g.accumulate_into(params);
  for (const char* name : {"sw.0.attn.k.bias", "cs.0.attn.k.bias"}) {
    double norm = 0.0;
    for (float v : params.grad(name).values()) norm += double(v) * v;
    EXPECT_LT(std::sqrt(norm), 1e-5) << name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, HatGradient, ::testing::Range(0, 5));

TEST(AttentionCost, Examples) {
  auto c = tiny_config({LayerKind::kSW}, 8, 8);
  EXPECT_EQ(attention_cost(c, 1, 8).score_count, 64u);
  c.K = 128;
  c.layout = layout_by_name("I1");
  EXPECT_EQ(attention_cost(c, 8, 128).score_count, 786'816u);
  EXPECT_GT(std::uint64_t{1024} * 1024 * 12, attention_cost(c, 8, 128).score_count);
  EXPECT_THROW(attention_cost(c, 9, 128), ContractError);
}

TEST(AttentionCost, FlopEstimateIsPositiveAndGrowsWithN) {
  auto c = tiny_config(layout_by_name("I3"), 16, 16);
  EXPECT_GT(attention_cost(c, 2, 16).flop_estimate, 0.0);
  EXPECT_LT(attention_cost(c, 2, 16).flop_estimate, attention_cost(c, 4, 16).flop_estimate);
}

TEST(AttentionCost, InstrumentedCounterMatchesForAllLayouts) {
  for (const std::string& name : layout_names()) {
    const auto c = tiny_config(layout_by_name(name), 8, 8);
    const auto params = init_hat(c, 13);
    for (std::size_t N : {1u, 2u, 5u, 8u}) {
      const auto batch = random_batch(c, 1, N, 28 + N);
      ScoreCounter counter;
      Graph g;
      hat_forward(g, params, c, batch);
      EXPECT_EQ(counter.count(), attention_cost(c, N, c.K).score_count) << name << " N=" << N;
    }
  }
}

}  // namespace
}  // namespace hatkit
