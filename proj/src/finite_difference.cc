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

#include "hatkit/finite_difference.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hatkit/error.h"
#include "hatkit/ops.h"
#include "hatkit/random.h"

namespace hatkit {

std::map<std::string, FdGradient> finite_difference_grad(const LossFn& f, const ParamStore& params,
                                                         const FdOptions& options) {
  if (options.step <= 0.0) throw ContractError("finite difference step must be positive");
  if (options.order != 2 && options.order != 4 && options.order != 6) {
    throw ContractError("finite difference order must be 2, 4 or 6");
  }
  if (options.max_elements_per_tensor < 64) {
    throw ContractError("finite difference subsampling keeps at least 64 elements per tensor");
  }
  ParamStore work = params;
  Rng rng(options.seed);
  std::map<std::string, FdGradient> out;
  for (const std::string& name : params.names()) {
    if (options.trainable_only && !params.entry(name).trainable) continue;
    if (std::any_of(options.skip_suffixes.begin(), options.skip_suffixes.end(),
                    [&](const std::string& suffix) { return name.ends_with(suffix); })) {
      continue;
    }
    Tensor& value = work.mutable_value(name);
    std::vector<std::size_t> idx(value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > options.max_elements_per_tensor) {
      for (std::size_t i = 0; i < options.max_elements_per_tensor; ++i) {
        std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
      }
      idx.resize(options.max_elements_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    FdGradient grad;
    grad.indices = idx;
    grad.values.reserve(idx.size());
    for (std::size_t i : idx) {
      const float original = value[i];
      // Evaluate at points actually representable around the value.
      auto eval_at = [&](double offset, double* where) {
        const float x = static_cast<float>(original + offset);
        value[i] = x;
        *where = static_cast<double>(x) - original;
        return f(work);
      };
      // Central quotients at h, 2h, 4h combined by Richardson extrapolation
      // up to the requested order.
      std::vector<double> level;
      double h = options.step;
      for (int k = 0; k < options.order / 2; ++k, h *= 2.0) {
        double dp, dm;
        const double f_plus = eval_at(h, &dp);
        const double f_minus = eval_at(-h, &dm);
        level.push_back((f_plus - f_minus) / (dp - dm));
      }
      double factor = 4.0;
      while (level.size() > 1) {
        for (std::size_t k = 0; k + 1 < level.size(); ++k) {
          level[k] = (factor * level[k] - level[k + 1]) / (factor - 1.0);
        }
        level.pop_back();
        factor *= 4.0;
      }
      const double estimate = level.front();
      value[i] = original;
      grad.values.push_back(estimate);
    }
    out.emplace(name, std::move(grad));
  }
  return out;
}

GradCheckResult compare_gradients(const ParamStore& analytic, const std::map<std::string, FdGradient>& fd,
                                  double zero_norm) {
  GradCheckResult result;
  for (const auto& [name, est] : fd) {
    const ParamStore::Entry& e = analytic.entry(name);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t j = 0; j < est.indices.size(); ++j) {
      const double a = e.grad.empty() ? 0.0 : e.grad[est.indices[j]];
      const double n = est.values[j];
      diff += (a - n) * (a - n);
      na += a * a;
      nn += n * n;
    }
    diff = std::sqrt(diff);
    na = std::sqrt(na);
    nn = std::sqrt(nn);
    const double denom = std::max(na, nn);
    const double rel = denom < zero_norm ? 0.0 : diff / denom;
    if (rel > result.max_relative_error || result.worst_tensor.empty()) {
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = name;
      }
    }
  }
  return result;
}

GradCheckResult check_output_gradients(const OutputFn& build, ParamStore params,
                                       std::uint64_t seed, const FdOptions& options) {
  Rng rng(mix_seed(seed, 0x5eed));
  Tensor weights;
  {
    Graph probe;
    weights = Tensor(build(probe, params).shape());
    for (float& w : weights.values()) w = static_cast<float>(2.0 * uniform01(rng) - 1.0);
  }
  auto contract = [&](const Tensor& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += static_cast<double>(y[i]) * weights[i];
    return acc;
  };
  Graph g;
  const Var y = build(g, params);
  g.backward(ops::sum(ops::mul(y, g.constant(weights))));
  params.zero_grads();
  g.accumulate_into(params);
  FdOptions fd_options = options;
  fd_options.seed = mix_seed(seed, options.seed);
  const auto fd = finite_difference_grad(
      [&](const ParamStore& p) {
        Graph fg;
        return contract(build(fg, p).value());
      },
      params, fd_options);
  return compare_gradients(params, fd);
}

}  // namespace hatkit
