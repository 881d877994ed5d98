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

#ifndef HATKIT_RANDOM_H_
#define HATKIT_RANDOM_H_

#include <cstdint>
#include <random>

#include "hatkit/tensor.h"

namespace hatkit {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; used to derive independent stream seeds such as
// seed = mix_seed(global_seed, doc_id).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Normal(0, stddev) resampled until |z| <= 2 stddev.
Tensor truncated_normal(Shape shape, float stddev, Rng& rng);

// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform01(Rng& rng);

}  // namespace hatkit

#endif  // HATKIT_RANDOM_H_
