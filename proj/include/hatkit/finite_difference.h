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

#ifndef HATKIT_FINITE_DIFFERENCE_H_
#define HATKIT_FINITE_DIFFERENCE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hatkit/graph.h"
#include "hatkit/param_store.h"

namespace hatkit {

// Central-difference gradient estimates for a subset of elements.
struct FdGradient {
  std::vector<std::size_t> indices;
  std::vector<double> values;
};

struct FdOptions {
  double step = 1e-3;
  // Accuracy order of the central stencil: 2 uses f(x +- h); 4 and 6 add
  // f(x +- 2h) and f(x +- 4h) with Richardson extrapolation. Higher orders
  // permit larger steps and hence less float32 round-off in the quotient.
  int order = 2;
  // Tensors larger than this are subsampled (uniformly, seeded); must be
  // at least 64.
  std::size_t max_elements_per_tensor = 64;
  std::uint64_t seed = 0;
  // Only estimate trainable entries.
  bool trainable_only = true;
  // Tensors whose name ends with one of these are not estimated (e.g. the
  // key bias, whose gradient is identically zero under softmax shift
  // invariance and would only measure round-off).
  std::vector<std::string> skip_suffixes;
};

using LossFn = std::function<double(const ParamStore&)>;

// Perturbs one element at a time in a private copy of `params`. Kinks
// (e.g. |w| at 0) yield meaningless estimates and must be excluded by the
// caller.
std::map<std::string, FdGradient> finite_difference_grad(
    const LossFn& f, const ParamStore& params, const FdOptions& options = {});

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
};

// Compares analytic gradients (from the store's grad slots) against FD
// estimates tensor by tensor: ||a - n|| / max(||a||, ||n||) over the sampled
// elements. Tensors whose analytic and numeric norms are both below
// `zero_norm` count as exact.
GradCheckResult compare_gradients(const ParamStore& analytic,
                                  const std::map<std::string, FdGradient>& fd,
                                  double zero_norm = 1e-7);

// Gradient check of an arbitrary graph output y: the scalar is
// sum(y * R) for a fixed random R, evaluated in double precision outside the
// graph for the finite differences.
using OutputFn = std::function<Var(Graph&, const ParamStore&)>;
GradCheckResult check_output_gradients(const OutputFn& build, ParamStore params,
                                       std::uint64_t seed, const FdOptions& options = {});

}  // namespace hatkit

#endif  // HATKIT_FINITE_DIFFERENCE_H_
