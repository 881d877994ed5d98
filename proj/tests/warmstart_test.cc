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

#include "hatkit/warmstart.h"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "hatkit/checkpoint.h"
#include "hatkit/error.h"
#include "hatkit/transformer.h"
#include "test_util.h"

namespace hatkit {
namespace {

using testing::max_abs_diff;

FlatConfig source_config(std::size_t layers, std::size_t max_positions = 16) {
  FlatConfig c;
  c.hidden = 16;
  c.heads = 2;
  c.ffn = 32;
  c.vocab = 40;
  c.max_positions = max_positions;
  c.layers = layers;
  c.dropout = 0.0f;
  return c;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::set<std::string> target_blocks(const MappingPlan& plan) {
  std::set<std::string> out;
  for (const auto& b : plan.blocks) out.insert(b.target_prefix);
  return out;
}

TEST(Plan, StrategyNamesRoundTrip) {
  for (auto s : all_warmstart_strategies()) EXPECT_EQ(parse_warmstart(warmstart_name(s)), s);
  EXPECT_THROW(parse_warmstart("S3"), ConfigError);
}

TEST(Plan, NoneIsEmpty) {
  const auto plan = plan_warmstart(WarmStartStrategy::kS0, source_config(6),
                                   testing::tiny_config(layout_by_name("I1")));
  EXPECT_TRUE(plan.directives.empty());
  EXPECT_TRUE(plan.blocks.empty());
}

TEST(Plan, EmbeddingsOnlyCopiesNoBlocks) {
  const auto plan = plan_warmstart(WarmStartStrategy::kS1, source_config(6),
                                   testing::tiny_config(layout_by_name("I1")));
  EXPECT_TRUE(plan.blocks.empty());
  std::set<std::string> targets;
  for (const auto& d : plan.directives) targets.insert(d.target);
  EXPECT_TRUE(targets.count("embeddings.word"));
  EXPECT_TRUE(targets.count("embeddings.sw_position"));
  EXPECT_FALSE(targets.count("embeddings.cs_position"));
}

TEST(Plan, PairedOnInterleavedLayout) {
  const auto c = testing::tiny_config(layout_by_name("I1"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS22, source_config(6), c);
  ASSERT_EQ(plan.blocks.size(), 12u);
  EXPECT_EQ(target_blocks(plan).size(), 12u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(plan.blocks[2 * i].source_layer, i);
    EXPECT_EQ(plan.blocks[2 * i].target_prefix, "sw." + std::to_string(i));
    EXPECT_EQ(plan.blocks[2 * i + 1].source_layer, i);
    EXPECT_EQ(plan.blocks[2 * i + 1].target_prefix, "cs." + std::to_string(i));
  }
}

TEST(Plan, PairedConsecutiveCsLayersShareThePrecedingSw) {
  const auto c = testing::tiny_config(layout_by_name("I2"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS22, source_config(6), c);
  // SW SW CS CS: both CS layers copy the second SW layer's source.
  EXPECT_EQ(plan.blocks[2].target_prefix, "cs.0");
  EXPECT_EQ(plan.blocks[2].source_layer, 1u);
  EXPECT_EQ(plan.blocks[3].target_prefix, "cs.1");
  EXPECT_EQ(plan.blocks[3].source_layer, 1u);
}

TEST(Plan, SequentialAssignmentTrace) {
  const auto c = testing::tiny_config(layout_by_name("I1"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS23, source_config(12), c);
  ASSERT_EQ(plan.blocks.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(plan.blocks[i].source_layer, i);
    EXPECT_EQ(plan.blocks[i].target_prefix, (i % 2 ? "cs." : "sw.") + std::to_string(i / 2));
  }
}

TEST(Plan, UnpairedCopiesOnlySwLayers) {
  const auto c = testing::tiny_config(layout_by_name("AH1"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS21, source_config(6), c);
  ASSERT_EQ(plan.blocks.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(plan.blocks[i].target_prefix, "sw." + std::to_string(i));
}

TEST(Plan, Errors) {
  const auto c = testing::tiny_config(layout_by_name("I1"));
  EXPECT_THROW(plan_warmstart(WarmStartStrategy::kS23, source_config(6), c), PlanError);
  EXPECT_THROW(plan_warmstart(WarmStartStrategy::kS21, source_config(5), c), PlanError);
  EXPECT_THROW(plan_warmstart(WarmStartStrategy::kS1, source_config(6, 4), c), PlanError);
  auto wide = source_config(6);
  wide.hidden = 32;
  EXPECT_THROW(plan_warmstart(WarmStartStrategy::kS1, wide, c), PlanError);
  EXPECT_NO_THROW(plan_warmstart(WarmStartStrategy::kS0, wide, c));
}

TEST(Plan, NoTargetWrittenTwice) {
  for (const std::string& name : layout_names()) {
    const auto c = testing::tiny_config(layout_by_name(name));
    for (auto s : all_warmstart_strategies()) {
      const auto plan = plan_warmstart(s, source_config(16), c);
      std::set<std::string> seen;
      for (const auto& d : plan.directives) EXPECT_TRUE(seen.insert(d.target).second) << name << d.target;
    }
  }
}

TEST(Apply, CopiesAreBitExactAndOthersRandom) {
  const auto src_cfg = source_config(6);
  const ParamStore source = init_flat(src_cfg, 1);
  const auto c = testing::tiny_config(layout_by_name("I1"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS22, src_cfg, c);
  const ParamStore result = apply_plan(plan, source, c, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    for (const char* t : {"attn.q.weight", "attn.k.weight", "attn.v.weight", "attn.o.weight"}) {
      EXPECT_TRUE(bit_equal(result.value("sw." + std::to_string(i) + "." + t),
                            source.value("layer." + std::to_string(i) + "." + t)));
      EXPECT_TRUE(bit_equal(result.value("cs." + std::to_string(i) + "." + t),
                            source.value("layer." + std::to_string(i) + "." + t)));
    }
  }
  const Tensor& pos = result.value("embeddings.sw_position");
  EXPECT_EQ(std::memcmp(pos.data(), source.value("embeddings.position").data(), pos.size() * sizeof(float)), 0);
  EXPECT_TRUE(bit_equal(result.value("embeddings.cs_position"), init_hat(c, 2).value("embeddings.cs_position")));
}

TEST(Apply, EmbeddingsOnlyLeavesBlocksRandom) {
  const auto src_cfg = source_config(6);
  const ParamStore source = init_flat(src_cfg, 1);
  const auto c = testing::tiny_config(layout_by_name("I1"));
  const ParamStore result = apply_plan(plan_warmstart(WarmStartStrategy::kS1, src_cfg, c), source, c, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    for (const std::string& suffix : block_param_suffixes()) {
      if (suffix.ends_with("bias") || suffix.ends_with("gain")) continue;
      EXPECT_FALSE(bit_equal(result.value("sw." + std::to_string(i) + "." + suffix),
                             source.value("layer." + std::to_string(i) + "." + suffix)));
    }
  }
  EXPECT_TRUE(bit_equal(result.value("embeddings.word"), source.value("embeddings.word")));
}

TEST(Apply, IsIdempotent) {
  const auto src_cfg = source_config(12);
  const ParamStore source = init_flat(src_cfg, 4);
  const auto c = testing::tiny_config(layout_by_name("I3"));
  for (auto s : all_warmstart_strategies()) {
    const auto plan = plan_warmstart(s, src_cfg, c);
    EXPECT_TRUE(apply_plan(plan, source, c, 5) == apply_plan(plan, source, c, 5));
  }
}

TEST(Apply, ShapeMismatchThrows) {
  const auto src_cfg = source_config(6);
  ParamStore source = init_flat(src_cfg, 1);
  const auto c = testing::tiny_config(layout_by_name("I1"));
  auto plan = plan_warmstart(WarmStartStrategy::kS21, src_cfg, c);
  plan.directives.push_back({"embeddings.word", "sw.0.attn.q.weight", 0});
  EXPECT_THROW(apply_plan(plan, source, c, 1), MappingError);
  plan.directives.pop_back();
  plan.directives.push_back({"layer.9.attn.q.weight", "cs.0.attn.q.weight", 0});
  EXPECT_THROW(apply_plan(plan, source, c, 1), MappingError);
}

TEST(Verify, FreshApplyPassesAndCorruptionIsCaught) {
  const auto src_cfg = source_config(6);
  const ParamStore source = init_flat(src_cfg, 1);
  const auto c = testing::tiny_config(layout_by_name("I1"));
  const auto plan = plan_warmstart(WarmStartStrategy::kS21, src_cfg, c);
  ParamStore result = apply_plan(plan, source, c, 7);
  auto report = verify_plan(plan, source, result);
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.checked, plan.directives.size());
  EXPECT_EQ(report.unfilled.size(), result.size() - plan.directives.size());
  result.mutable_value("sw.3.ffn.in.weight")[5] += 1.0f;
  report = verify_plan(plan, source, result);
  ASSERT_EQ(report.failures.size(), 1u);
  EXPECT_EQ(report.failures[0], "sw.3.ffn.in.weight");
}

class FlatEquivalence : public ::testing::TestWithParam<WarmStartStrategy> {};

TEST_P(FlatEquivalence, SwPrefixOnOneSegmentMatchesSource) {
  const auto src_cfg = source_config(6, 16);
  const ParamStore source = init_flat(src_cfg, 11);
  auto c = testing::tiny_config(layout_by_name("AH1"), 8, 4);
  c.layout = Layout(6, LayerKind::kSW);
  const auto plan = plan_warmstart(GetParam(), src_cfg, c);
  const ParamStore hat = apply_plan(plan, source, c, 12);
  const HatBatch batch = testing::random_batch(c, 3, 1, 13);
  FlatBatch flat;
  flat.B = 3;
  flat.T = c.K;
  flat.ids = batch.ids;
  flat.valid = batch.valid;
  flat.global.assign(batch.ids.size(), 0);
  Graph g1, g2;
  const Tensor a = hat_forward(g1, hat, c, batch).tokens.value();
  const Tensor b = flat_forward(g2, source, src_cfg, flat).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-5f);
}

INSTANTIATE_TEST_SUITE_P(Strategies, FlatEquivalence,
                         ::testing::Values(WarmStartStrategy::kS21, WarmStartStrategy::kS22));

TEST(Checkpoint, BitExactRoundTrip) {
  const auto c = testing::tiny_config(layout_by_name("I2"));
  ParamStore params = init_hat(c, 21);
  params.mutable_value("embeddings.word")[0] = -0.0f;
  params.mutable_value("embeddings.word")[1] = 1e-40f;
  const auto dir = std::filesystem::temp_directory_path() / "hatkit_ckpt_test";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir.string(), {"hat", to_json(c), params});
  const Checkpoint back = load_checkpoint(dir.string());
  EXPECT_EQ(back.model, "hat");
  EXPECT_EQ(back.params.names(), params.names());
  for (const auto& name : params.names()) EXPECT_TRUE(bit_equal(back.params.value(name), params.value(name))) << name;
  const HatConfig c2 = hat_config_from_json(back.config);
  EXPECT_EQ(c2.layout, c.layout);
  EXPECT_EQ(c2.K, c.K);
  EXPECT_EQ(c2.dropout, c.dropout);
  // A blob of the wrong length is rejected.
  { std::ofstream(dir / "embeddings.type.bin", std::ios::binary) << "abc"; }
  EXPECT_THROW(load_checkpoint(dir.string()), IoError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir.string()), IoError);
}

TEST(Checkpoint, ConfigReaderRejectsUnknownKeys) {
  nlohmann::json doc = to_json(FlatConfig{});
  EXPECT_EQ(flat_config_from_json(doc).layers, 6u);
  doc["layerz"] = 3;
  EXPECT_THROW(flat_config_from_json(doc), ConfigError);
  EXPECT_THROW(hat_config_from_json({{"hidden", "wide"}}), ConfigError);
}

}  // namespace
}  // namespace hatkit
