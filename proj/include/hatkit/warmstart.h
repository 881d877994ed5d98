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

#ifndef HATKIT_WARMSTART_H_
#define HATKIT_WARMSTART_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/baseline_models.h"
#include "hatkit/hat_model.h"
#include "hatkit/param_store.h"

namespace hatkit {

// S0: nothing copied. S1: embeddings and MLM head. S2.1: S1 plus source
// layer i into the i-th SW layer. S2.2: S2.1 plus every CS layer copies the
// source layer of the nearest SW layer before it. S2.3: S1 plus source
// layers consumed in order by the whole layer sequence.
enum class WarmStartStrategy { kS0, kS1, kS21, kS22, kS23 };

WarmStartStrategy parse_warmstart(std::string_view name);
std::string_view warmstart_name(WarmStartStrategy strategy);
const std::vector<WarmStartStrategy>& all_warmstart_strategies();

// Copies `rows` leading rows of source into target (0 = the whole tensor).
struct CopyDirective {
  std::string source;
  std::string target;
  std::size_t rows = 0;
};

struct BlockAssignment {
  std::size_t source_layer = 0;
  std::string target_prefix;
};

struct MappingPlan {
  WarmStartStrategy strategy = WarmStartStrategy::kS0;
  std::vector<BlockAssignment> blocks;
  std::vector<CopyDirective> directives;
};

// Throws PlanError when dimensions disagree, the source has too few layers
// or too few positions for K.
MappingPlan plan_warmstart(WarmStartStrategy strategy, const FlatConfig& source,
                           const HatConfig& target);

// Fresh init_hat(target, seed) with every directive copied over. Throws
// MappingError on a missing tensor or shape mismatch.
ParamStore apply_plan(const MappingPlan& plan, const ParamStore& source, const HatConfig& target,
                      std::uint64_t seed);

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> failures;
  // Target tensors not written by any directive.
  std::vector<std::string> unfilled;

  bool ok() const { return failures.empty(); }
};

VerifyReport verify_plan(const MappingPlan& plan, const ParamStore& source,
                         const ParamStore& result);

}  // namespace hatkit

#endif  // HATKIT_WARMSTART_H_
