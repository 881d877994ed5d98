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

#ifndef HATKIT_PARAM_STORE_H_
#define HATKIT_PARAM_STORE_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/tensor.h"

namespace hatkit {

// Named parameter tensors with per-entry gradient slots. Names are dotted
// paths such as "sw.3.attn.q.weight". Iteration order is insertion order.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
    bool trainable = true;
  };

  void add(std::string name, Tensor value, bool trainable = true);
  // Replaces the value of an existing entry; shapes must agree.
  void set(std::string_view name, const Tensor& value);

  bool contains(std::string_view name) const;
  const Tensor& value(std::string_view name) const;
  Tensor& mutable_value(std::string_view name);
  const Entry& entry(std::string_view name) const;
  Entry& mutable_entry(std::string_view name);

  // Gradient slot, allocated as zeros of the value's shape on first access.
  Tensor& grad(std::string_view name);

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }
  std::size_t parameter_count() const;

  void zero_grads();
  void add_grad(std::string_view name, const Tensor& grad);

  bool operator==(const ParamStore& other) const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
  std::vector<std::string> order_;
};

}  // namespace hatkit

#endif  // HATKIT_PARAM_STORE_H_
