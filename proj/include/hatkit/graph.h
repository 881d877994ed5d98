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

#ifndef HATKIT_GRAPH_H_
#define HATKIT_GRAPH_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hatkit/param_store.h"
#include "hatkit/tensor.h"

namespace hatkit {

class Graph;

// Handle to a value recorded in a Graph. Cheap to copy; valid while the
// owning Graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Gradient after Graph::backward; zeros when nothing flowed here.
  Tensor grad() const;

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Records one forward pass (the gradient context). Nodes are appended in
// topological order; backward() walks them in reverse exactly once and
// accumulates gradients additively across fan-out.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  explicit Graph(bool training = false, std::uint64_t seed = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  std::mt19937_64& rng() { return rng_; }

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad = true);
  // The store must outlive the graph; repeated lookups of one name return
  // the same node so shared weights accumulate into a single gradient.
  Var param(const ParamStore& store, std::string_view name);

  Var record(Tensor value, std::vector<int> parents, BackwardFn backward);

  void backward(Var loss);
  // Adds every parameter gradient of this graph into the store's slots.
  void accumulate_into(ParamStore& store) const;
  std::map<std::string, Tensor> param_grads() const;

  const Tensor& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  // Zero-initialised on first use.
  Tensor& grad_buffer(int id);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::string param_name;
  };

  bool training_;
  std::mt19937_64 rng_;
  std::deque<Node> nodes_;
  std::map<std::string, int, std::less<>> param_ids_;
  const ParamStore* bound_store_ = nullptr;
  bool backward_done_ = false;
};

}  // namespace hatkit

#endif  // HATKIT_GRAPH_H_
