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

#ifndef HATKIT_TENSOR_H_
#define HATKIT_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "hatkit/memory.h"

namespace hatkit {

using Shape = std::vector<std::size_t>;
using FloatBuffer = std::vector<float, TrackingAllocator<float>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float32 array. Invariant: product(shape) == size().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::span<const float> values);
  Tensor(Shape shape, std::initializer_list<float> values);

  static Tensor scalar(float value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return {data_.data(), data_.size()}; }
  std::span<const float> values() const { return {data_.data(), data_.size()}; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& at(std::size_t row, std::size_t col);
  float at(std::size_t row, std::size_t col) const;

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(float value);
  bool all_finite() const;

  // Rows x last-dimension view used by the matrix kernels.
  std::size_t rows() const;
  std::size_t cols() const;

  bool operator==(const Tensor& other) const;

 private:
  Shape shape_;
  FloatBuffer data_;
};

}  // namespace hatkit

#endif  // HATKIT_TENSOR_H_
