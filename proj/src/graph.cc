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

#include "hatkit/graph.h"

#include "hatkit/error.h"

namespace hatkit {

const Tensor& Var::value() const { return graph_->value(id_); }

Tensor Var::grad() const {
  if (graph_->has_grad(id_)) return graph_->grad(id_);
  return Tensor(value().shape());
}

Graph::Graph(bool training, std::uint64_t seed) : training_(training), rng_(seed) {}

const Tensor& Graph::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Tensor& Graph::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::param(const ParamStore& store, std::string_view name) {
  if (bound_store_ && bound_store_ != &store) {
    throw ContractError("a graph may reference parameters of a single store");
  }
  bound_store_ = &store;
  if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var(this, it->second);
  const ParamStore::Entry& e = store.entry(name);
  Node n;
  n.external = &e.value;
  n.requires_grad = e.trainable;
  n.param_name = std::string(name);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(std::string(name), id);
  return Var(this, id);
}

Var Graph::record(Tensor value, std::vector<int> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) {
    if (nodes_[p].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw ContractError("loss belongs to another graph");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward needs a scalar loss, got " + shape_string(value(loss.id()).shape()));
  }
  if (backward_done_) throw ContractError("backward already ran on this graph");
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] = 1.0f;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
}

void Graph::accumulate_into(ParamStore& store) const {
  for (const auto& [name, id] : param_ids_) {
    const Node& n = nodes_[id];
    if (n.requires_grad && !n.grad.empty()) store.add_grad(name, n.grad);
  }
}

std::map<std::string, Tensor> Graph::param_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : param_ids_) {
    const Node& n = nodes_[id];
    if (n.requires_grad) out.emplace(name, n.grad.empty() ? Tensor(value(id).shape()) : n.grad);
  }
  return out;
}

}  // namespace hatkit
