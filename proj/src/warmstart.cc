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

#include <algorithm>
#include <cstring>
#include <set>

#include "hatkit/error.h"
#include "hatkit/transformer.h"

namespace hatkit {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw PlanError(message);
}

void add_block(MappingPlan& plan, std::size_t source_layer, const std::string& target_prefix) {
  plan.blocks.push_back({source_layer, target_prefix});
  for (const std::string& suffix : block_param_suffixes()) {
    plan.directives.push_back({flat_block_prefix(source_layer) + "." + suffix, target_prefix + "." + suffix, 0});
  }
}

}  // namespace

WarmStartStrategy parse_warmstart(std::string_view name) {
  if (name == "S0") return WarmStartStrategy::kS0;
  if (name == "S1") return WarmStartStrategy::kS1;
  if (name == "S2.1") return WarmStartStrategy::kS21;
  if (name == "S2.2") return WarmStartStrategy::kS22;
  if (name == "S2.3") return WarmStartStrategy::kS23;
  throw ConfigError("unknown warm-start strategy: " + std::string(name));
}

std::string_view warmstart_name(WarmStartStrategy strategy) {
  switch (strategy) {
    case WarmStartStrategy::kS0: return "S0";
    case WarmStartStrategy::kS1: return "S1";
    case WarmStartStrategy::kS21: return "S2.1";
    case WarmStartStrategy::kS22: return "S2.2";
    case WarmStartStrategy::kS23: return "S2.3";
  }
  return "?";
}

const std::vector<WarmStartStrategy>& all_warmstart_strategies() {
  static const std::vector<WarmStartStrategy> kAll = {WarmStartStrategy::kS0, WarmStartStrategy::kS1,
                                                      WarmStartStrategy::kS21, WarmStartStrategy::kS22,
                                                      WarmStartStrategy::kS23};
  return kAll;
}

MappingPlan plan_warmstart(WarmStartStrategy strategy, const FlatConfig& source,
                           const HatConfig& target) {
  target.validate();
  MappingPlan plan;
  plan.strategy = strategy;
  if (strategy == WarmStartStrategy::kS0) return plan;

  require(source.hidden == target.hidden, "hidden size differs between source and target");
  require(source.heads == target.heads, "head count differs between source and target");
  require(source.ffn == target.ffn, "feed-forward size differs between source and target");
  require(source.vocab == target.vocab, "vocabulary size differs between source and target");
  require(source.max_positions >= target.K, "source has fewer positions than the segment length");

  plan.directives.push_back({"embeddings.word", "embeddings.word", 0});
  plan.directives.push_back({"embeddings.type", "embeddings.type", 0});
  plan.directives.push_back({"embeddings.position", "embeddings.sw_position", target.K});
  plan.directives.push_back({"mlm.pr.weight", "mlm.pr.weight", 0});
  plan.directives.push_back({"mlm.pr.bias", "mlm.pr.bias", 0});
  plan.directives.push_back({"mlm.out.bias", "mlm.out.bias", 0});
  if (!source.tie_mlm && !target.tie_mlm) {
    plan.directives.push_back({"mlm.decoder.weight", "mlm.decoder.weight", 0});
  }
  if (strategy == WarmStartStrategy::kS1) return plan;

  const Layout& layout = target.layout;
  if (strategy == WarmStartStrategy::kS23) {
    require(layout.size() <= source.layers, "S2.3 needs " + std::to_string(layout.size()) +
                                                 " source layers, have " + std::to_string(source.layers));
    for (std::size_t i = 0; i < layout.size(); ++i) add_block(plan, i, hat_block_prefix(layout, i));
    return plan;
  }
  const std::size_t sw = count_layers(layout, LayerKind::kSW);
  require(sw <= source.layers, "needs " + std::to_string(sw) + " source layers for the SW stack, have " +
                                   std::to_string(source.layers));
  std::size_t next_sw = 0;
  std::size_t last_sw_source = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i] == LayerKind::kSW) {
      last_sw_source = next_sw++;
      add_block(plan, last_sw_source, hat_block_prefix(layout, i));
    } else if (strategy == WarmStartStrategy::kS22) {
      add_block(plan, last_sw_source, hat_block_prefix(layout, i));
    }
  }
  return plan;
}

ParamStore apply_plan(const MappingPlan& plan, const ParamStore& source, const HatConfig& target,
                      std::uint64_t seed) {
  ParamStore out = init_hat(target, seed);
  std::set<std::string> written;
  for (const CopyDirective& d : plan.directives) {
    if (!written.insert(d.target).second) throw MappingError("target written twice: " + d.target);
    if (!source.contains(d.source)) throw MappingError("source tensor missing: " + d.source);
    if (!out.contains(d.target)) throw MappingError("target tensor missing: " + d.target);
    const Tensor& src = source.value(d.source);
    Tensor& dst = out.mutable_value(d.target);
    if (d.rows == 0) {
      if (src.shape() != dst.shape()) {
        throw MappingError("shape mismatch " + d.source + " " + shape_string(src.shape()) + " -> " + d.target +
                           " " + shape_string(dst.shape()));
      }
      dst = src;
    } else {
      if (src.rank() != 2 || dst.rank() != 2 || src.dim(1) != dst.dim(1) || dst.dim(0) != d.rows ||
          src.dim(0) < d.rows) {
        throw MappingError("row copy mismatch " + d.source + " -> " + d.target);
      }
      std::copy_n(src.data(), d.rows * src.dim(1), dst.data());
    }
  }
  return out;
}

VerifyReport verify_plan(const MappingPlan& plan, const ParamStore& source,
                         const ParamStore& result) {
  VerifyReport report;
  std::set<std::string> written;
  for (const CopyDirective& d : plan.directives) {
    ++report.checked;
    written.insert(d.target);
    if (!source.contains(d.source) || !result.contains(d.target)) {
      report.failures.push_back(d.target);
      continue;
    }
    const Tensor& src = source.value(d.source);
    const Tensor& dst = result.value(d.target);
    const std::size_t n = d.rows == 0 ? src.size() : d.rows * (src.rank() == 2 ? src.dim(1) : 0);
    const bool shapes_ok = d.rows == 0 ? src.shape() == dst.shape() : dst.size() == n && src.size() >= n;
    if (!shapes_ok || std::memcmp(src.data(), dst.data(), n * sizeof(float)) != 0) {
      report.failures.push_back(d.target);
    }
  }
  for (const std::string& name : result.names()) {
    if (!written.count(name)) report.unfilled.push_back(name);
  }
  return report;
}

}  // namespace hatkit
