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

#include <gtest/gtest.h>

#include <cmath>

#include "hatkit/error.h"
#include "hatkit/ops.h"
#include "reference_model.h"
#include "test_util.h"

namespace hatkit {
namespace {

using testing::max_abs_diff;
using testing::random_batch;
using testing::tiny_config;

const Layout kLayout = {LayerKind::kSW, LayerKind::kCS, LayerKind::kSW, LayerKind::kCS};

ParamStore model_with_heads(const HatConfig& c, std::uint64_t seed, std::size_t labels = 3) {
  ParamStore p = init_hat(c, seed);
  Rng rng(mix_seed(seed, 9));
  add_head_params(p, "head", c.hidden, labels, rng);
  add_head_params(p, "scorer", c.hidden, 1, rng);
  return p;
}

// Identity PR and classifier with zero biases over H = 3.
ParamStore identity_head() {
  ParamStore p;
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0f;
  p.add("head.pr.weight", eye);
  p.add("head.pr.bias", Tensor({3}));
  p.add("head.cls.weight", eye);
  p.add("head.cls.bias", Tensor({3}));
  return p;
}

EncoderOutput manual_segments(Graph& g, std::size_t B, std::size_t N, const Tensor& segments,
                              std::vector<std::uint8_t> valid) {
  EncoderOutput enc;
  enc.B = B;
  enc.N = N;
  enc.K = 1;
  enc.segments = g.constant(segments);
  enc.tokens = enc.segments;
  enc.segment_valid = std::move(valid);
  return enc;
}

TEST(Heads, ShapesForEverySegmentCount) {
  const auto c = tiny_config(kLayout, 8, 4);
  const auto p = model_with_heads(c, 1);
  for (std::size_t N = 1; N <= c.n_max; ++N) {
    Graph g;
    const auto enc = hat_forward(g, p, c, random_batch(c, 2, N, N));
    EXPECT_EQ(token_head(g, p, "head", enc).shape(), (Shape{2 * N * 8, 3}));
    EXPECT_EQ(segment_head(g, p, "head", enc).shape(), (Shape{2 * N, 3}));
    EXPECT_EQ(document_head(g, p, "head", enc).shape(), (Shape{2, 3}));
    EXPECT_EQ(nli_head(g, p, "head", enc).shape(), (Shape{2, 3}));
    EXPECT_EQ(mlm_logits(g, p, "mlm", enc.tokens, "embeddings.word", true).shape(), (Shape{2 * N * 8, c.vocab}));
  }
  for (std::size_t N = 1; N <= c.n_max; ++N) {
    Graph g;
    const auto enc = hat_forward(g, p, c, random_batch(c, 10, N, N));
    EXPECT_EQ(mcqa_head(g, p, "scorer", enc, 5).shape(), (Shape{2, 5}));
  }
}

TEST(Heads, ZeroEncoderOutputGivesIdenticalRows) {
  const auto c = tiny_config(kLayout);
  const auto p = model_with_heads(c, 2);
  Graph g;
  const auto enc = manual_segments(g, 2, 3, Tensor({6, c.hidden}), {1, 1, 1, 1, 1, 1});
  const Tensor tok = token_head(g, p, "head", enc).value();
  const Tensor seg = segment_head(g, p, "head", enc).value();
  // Expected: classifier(tanh(PR bias)).
  Graph ref;
  const Var bias_path = projection(ref, p, "head", ref.constant(Tensor({1, c.hidden})));
  const Tensor expected = apply_linear(ref, p, "head.cls", bias_path).value();
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t l = 0; l < 3; ++l) {
      EXPECT_EQ(tok.at(r, l), expected.at(0, l));
      EXPECT_EQ(seg.at(r, l), expected.at(0, l));
    }
  }
}

TEST(DocumentHead, HandComputedMaxPool) {
  const ParamStore p = identity_head();
  Graph g;
  const auto enc = manual_segments(g, 1, 2, Tensor({2, 3}, {0.1f, -0.5f, 0.3f, 0.2f, -0.7f, 0.0f}), {1, 1});
  const Tensor out = document_head(g, p, "head", enc).value();
  const double pooled[3] = {std::tanh(0.2), std::tanh(-0.5), std::tanh(0.3)};
  for (std::size_t h = 0; h < 3; ++h) EXPECT_NEAR(out.at(0, h), std::tanh(pooled[h]), 1e-6);
}

TEST(DocumentHead, SingleSegmentIsTheProjectionPath) {
  const auto c = tiny_config(kLayout);
  const auto p = model_with_heads(c, 3);
  Graph g;
  const auto enc = hat_forward(g, p, c, random_batch(c, 2, 1, 5));
  const Tensor doc = document_head(g, p, "head", enc).value();
  const Tensor direct = apply_linear(g, p, "head.cls", projection(g, p, "head", projection(g, p, "head", enc.segments))).value();
  EXPECT_LT(max_abs_diff(doc, direct), 1e-6f);
}

TEST(DocumentHead, DuplicateSegmentLeavesOutputUnchanged) {
  const auto c = tiny_config(kLayout);
  const auto p = model_with_heads(c, 4);
  Rng rng(5);
  const Tensor a = truncated_normal({2, c.hidden}, 1.0f, rng);
  Tensor dup({3, c.hidden});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t h = 0; h < c.hidden; ++h) dup.at(r, h) = a.at(std::min<std::size_t>(r, 1), h);
  }
  Graph g;
  const Tensor x = document_head(g, p, "head", manual_segments(g, 1, 2, a, {1, 1})).value();
  const Tensor y = document_head(g, p, "head", manual_segments(g, 1, 3, dup, {1, 1, 1})).value();
  EXPECT_EQ(x, y);
}

TEST(DocumentHead, PadSegmentsAreExcluded) {
  const ParamStore p = identity_head();
  Graph g;
  const Tensor with_pad({3, 3}, {0.1f, -0.5f, 0.3f, 9.0f, 9.0f, 9.0f, 0.2f, -0.7f, 0.0f});
  const Tensor without({2, 3}, {0.1f, -0.5f, 0.3f, 0.2f, -0.7f, 0.0f});
  EXPECT_EQ(document_head(g, p, "head", manual_segments(g, 1, 3, with_pad, {1, 0, 1})).value(),
            document_head(g, p, "head", manual_segments(g, 1, 2, without, {1, 1})).value());
  EXPECT_THROW(document_head(g, p, "head", manual_segments(g, 1, 2, without, {0, 0})), ContractError);
}

TEST(DocumentHead, MaxPoolIsMonotone) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t N = 1 + uniform_index(rng, 5);
    Tensor x = truncated_normal({N, 4}, 1.0f, rng);
    std::vector<std::uint8_t> valid(N, 1);
    Graph g;
    const Tensor before = ops::max_pool_groups(g.constant(x), N, valid).value();
    x.at(uniform_index(rng, N), uniform_index(rng, 4)) += static_cast<float>(uniform01(rng));
    const Tensor after = ops::max_pool_groups(g.constant(x), N, valid).value();
    for (std::size_t h = 0; h < 4; ++h) EXPECT_GE(after.at(0, h), before.at(0, h));
  }
}

TEST(NliHead, EqualsSegmentHeadOfLastValidSegment) {
  const auto c = tiny_config(kLayout, 8, 4);
  const auto p = model_with_heads(c, 7);
  Graph g;
  const auto batch = random_batch(c, 4, 4, 8, false, /*pad_tail=*/true);
  const auto enc = hat_forward(g, p, c, batch);
  const Tensor nli = nli_head(g, p, "head", enc).value();
  const Tensor seg = segment_head(g, p, "head", enc).value();
  for (std::size_t b = 0; b < 4; ++b) {
    std::size_t last = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (batch.valid[(b * 4 + i) * c.K]) last = i;
    }
    for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(nli.at(b, l), seg.at(b * 4 + last, l));
  }
}

TEST(McqaHead, IdenticalChoicesGiveUniformLoss) {
  const auto c = tiny_config(kLayout);
  const auto p = model_with_heads(c, 9);
  const auto one = random_batch(c, 1, 3, 10);
  HatBatch five = one;
  five.B = 5;
  for (int k = 1; k < 5; ++k) {
    five.ids.insert(five.ids.end(), one.ids.begin(), one.ids.end());
    five.valid.insert(five.valid.end(), one.valid.begin(), one.valid.end());
  }
  Graph g;
  const Var scores = mcqa_head(g, p, "scorer", hat_forward(g, p, c, five), 5);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_NEAR(scores.value().at(0, k), scores.value().at(0, 0), 1e-6);
  const std::vector<std::int32_t> target = {2};
  EXPECT_NEAR(ops::cross_entropy(scores, target).value()[0], std::log(5.0), 1e-6);
}

TEST(McqaHead, ChoiceCountAndScorerWidthAreChecked) {
  const auto c = tiny_config(kLayout);
  const auto p = model_with_heads(c, 11);
  Graph g;
  const auto enc4 = hat_forward(g, p, c, random_batch(c, 4, 2, 12));
  EXPECT_THROW(mcqa_head(g, p, "scorer", enc4, 4), ContractError);
  const auto enc5 = hat_forward(g, p, c, random_batch(c, 5, 2, 12));
  EXPECT_THROW(mcqa_head(g, p, "head", enc5, 5), ContractError);
  const auto enc7 = hat_forward(g, p, c, random_batch(c, 7, 2, 12));
  EXPECT_THROW(mcqa_head(g, p, "scorer", enc7, 5), ContractError);
}

TEST(Heads, GradientsReachTheEncoder) {
  const auto c = tiny_config(kLayout);
  ParamStore p = model_with_heads(c, 13);
  using HeadFn = std::function<Var(Graph&, const EncoderOutput&)>;
  const std::vector<HeadFn> heads = {
      [&](Graph& g, const EncoderOutput& e) { return token_head(g, p, "head", e); },
      [&](Graph& g, const EncoderOutput& e) { return segment_head(g, p, "head", e); },
      [&](Graph& g, const EncoderOutput& e) { return document_head(g, p, "head", e); },
      [&](Graph& g, const EncoderOutput& e) { return nli_head(g, p, "head", e); },
      [&](Graph& g, const EncoderOutput& e) { return mcqa_head(g, p, "scorer", e, 5); },
  };
  for (const auto& head : heads) {
    Graph g;
    const auto enc = hat_forward(g, p, c, random_batch(c, 5, 2, 14));
    g.backward(ops::sum(ops::tanh(head(g, enc))));
    const auto grads = g.param_grads();
    for (const char* name : {"embeddings.word", "sw.0.ffn.in.weight", "cs.1.attn.v.weight"}) {
      double norm = 0.0;
      for (float v : grads.at(name).values()) norm += std::abs(v);
      EXPECT_GT(norm, 0.0) << name;
    }
  }
}

class HeadGradient : public ::testing::TestWithParam<int> {};

TEST_P(HeadGradient, EveryHeadMatchesFiniteDifferences) {
  const std::uint64_t seed = static_cast<std::uint64_t>(GetParam());
  const auto c = tiny_config({LayerKind::kSW, LayerKind::kCS}, 8, 3);
  const auto params = testing::rescaled(model_with_heads(c, seed), seed);
  const auto batch = random_batch(c, 2, 3, seed + 200, false, /*pad_tail=*/true);
  const auto choices = random_batch(c, 5, 2, seed + 300, false, /*pad_tail=*/true);
  using Build = std::function<Var(Graph&, const ParamStore&, const EncoderOutput&)>;
  using Ref = std::function<reference::Mat(const ParamStore&, const reference::Encoded&)>;
  const std::vector<std::tuple<std::string, Build, Ref>> heads = {
      {"token", [](Graph& g, const ParamStore& p, const EncoderOutput& e) { return token_head(g, p, "head", e); },
       [](const ParamStore& p, const reference::Encoded& e) { return reference::classify(p, "head", e.tokens); }},
      {"segment", [](Graph& g, const ParamStore& p, const EncoderOutput& e) { return segment_head(g, p, "head", e); },
       [](const ParamStore& p, const reference::Encoded& e) { return reference::classify(p, "head", e.segments); }},
      {"document", [](Graph& g, const ParamStore& p, const EncoderOutput& e) { return document_head(g, p, "head", e); },
       [](const ParamStore& p, const reference::Encoded& e) { return reference::document_head(p, "head", e); }},
      {"nli", [](Graph& g, const ParamStore& p, const EncoderOutput& e) { return nli_head(g, p, "head", e); },
       [](const ParamStore& p, const reference::Encoded& e) {
         return reference::classify(p, "head", reference::rows_of(e.segments, reference::last_valid(e)));
       }},
      {"mcqa", [](Graph& g, const ParamStore& p, const EncoderOutput& e) { return mcqa_head(g, p, "scorer", e, 5); },
       [](const ParamStore& p, const reference::Encoded& e) {
         return reference::classify(p, "scorer", reference::rows_of(e.segments, reference::last_valid(e)));
       }},
      {"mlm",
       [](Graph& g, const ParamStore& p, const EncoderOutput& e) {
         return mlm_logits(g, p, "mlm", e.tokens, "embeddings.word", true);
       },
       [](const ParamStore& p, const reference::Encoded& e) { return reference::mlm_logits(p, e.tokens); }},
  };
  for (const auto& [name, build, ref] : heads) {
    const HatBatch& batch_used = name == "mcqa" ? choices : batch;
    double gap = 0.0;
    const auto result = reference::check_against_reference(
        [&](Graph& g, const ParamStore& p) { return build(g, p, hat_forward(g, p, c, batch_used)); },
        [&](const ParamStore& p) { return ref(p, reference::hat_forward(p, c, batch_used)); }, params, seed, &gap);
    EXPECT_LT(gap, 1e-5) << name;
    EXPECT_LT(result.max_relative_error, 1e-3) << name << " worst " << result.worst_tensor;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, HeadGradient, ::testing::Range(0, 5));

}  // namespace
}  // namespace hatkit
