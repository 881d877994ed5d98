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

#include "hatkit/param_store.h"

#include "hatkit/error.h"

namespace hatkit {

void ParamStore::add(std::string name, Tensor value, bool trainable) {
  if (entries_.count(name)) throw ContractError("duplicate parameter name: " + name);
  order_.push_back(name);
  entries_.emplace(std::move(name), Entry{std::move(value), Tensor(), trainable});
}

void ParamStore::set(std::string_view name, const Tensor& value) {
  Entry& e = mutable_entry(name);
  if (e.value.shape() != value.shape()) {
    throw DimensionError("shape mismatch setting " + std::string(name) + ": " +
                         shape_string(e.value.shape()) + " vs " + shape_string(value.shape()));
  }
  e.value = value;
}

bool ParamStore::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const ParamStore::Entry& ParamStore::entry(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw LookupError("unknown parameter: " + std::string(name));
  return it->second;
}

ParamStore::Entry& ParamStore::mutable_entry(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw LookupError("unknown parameter: " + std::string(name));
  return it->second;
}

const Tensor& ParamStore::value(std::string_view name) const { return entry(name).value; }
Tensor& ParamStore::mutable_value(std::string_view name) { return mutable_entry(name).value; }

Tensor& ParamStore::grad(std::string_view name) {
  Entry& e = mutable_entry(name);
  if (e.grad.empty()) e.grad = Tensor(e.value.shape());
  return e.grad;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) {
    if (!e.grad.empty()) e.grad.fill(0.0f);
  }
}

void ParamStore::add_grad(std::string_view name, const Tensor& g) {
  Tensor& slot = grad(name);
  if (slot.shape() != g.shape()) throw DimensionError("gradient shape mismatch for " + std::string(name));
  float* dst = slot.data();
  const float* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (order_ != other.order_) return false;
  for (const auto& [name, e] : entries_) {
    const Entry& o = other.entry(name);
    if (!(e.value == o.value) || e.trainable != o.trainable) return false;
  }
  return true;
}

}  // namespace hatkit
