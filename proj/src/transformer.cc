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

#include "hatkit/transformer.h"

#include "hatkit/ops.h"

namespace hatkit {

const std::vector<std::string>& block_param_suffixes() {
  static const std::vector<std::string> kSuffixes = {
      "attn.q.weight", "attn.q.bias",   "attn.k.weight",  "attn.k.bias",
      "attn.v.weight", "attn.v.bias",   "attn.o.weight",  "attn.o.bias",
      "ln1.gain",      "ln1.bias",      "ffn.in.weight",  "ffn.in.bias",
      "ffn.out.weight", "ffn.out.bias", "ln2.gain",       "ln2.bias"};
  return kSuffixes;
}

void add_linear_params(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out, Rng& rng) {
  store.add(prefix + ".weight", truncated_normal({in, out}, kInitStd, rng));
  store.add(prefix + ".bias", Tensor({out}, 0.0f));
}

void add_layer_norm_params(ParamStore& store, const std::string& prefix, std::size_t dim) {
  store.add(prefix + ".gain", Tensor({dim}, 1.0f));
  store.add(prefix + ".bias", Tensor({dim}, 0.0f));
}

void add_block_params(ParamStore& store, const std::string& prefix, const BlockDims& dims,
                      Rng& rng) {
  for (const char* name : {"attn.q", "attn.k", "attn.v", "attn.o"}) {
    add_linear_params(store, prefix + "." + name, dims.hidden, dims.hidden, rng);
  }
  add_layer_norm_params(store, prefix + ".ln1", dims.hidden);
  add_linear_params(store, prefix + ".ffn.in", dims.hidden, dims.ffn, rng);
  add_linear_params(store, prefix + ".ffn.out", dims.ffn, dims.hidden, rng);
  add_layer_norm_params(store, prefix + ".ln2", dims.hidden);
}

Var apply_linear(Graph& g, const ParamStore& store, const std::string& prefix, Var x) {
  return ops::linear(x, g.param(store, prefix + ".weight"), g.param(store, prefix + ".bias"));
}

Var apply_layer_norm(Graph& g, const ParamStore& store, const std::string& prefix, Var x) {
  return ops::layer_norm(x, g.param(store, prefix + ".gain"), g.param(store, prefix + ".bias"));
}

Var block_forward(Graph& g, const ParamStore& store, const std::string& prefix, Var x,
                  std::shared_ptr<const AttentionPattern> pattern, std::size_t heads,
                  float dropout) {
  const Var q = apply_linear(g, store, prefix + ".attn.q", x);
  const Var k = apply_linear(g, store, prefix + ".attn.k", x);
  const Var v = apply_linear(g, store, prefix + ".attn.v", x);
  const Var ctx = ops::attention(q, k, v, std::move(pattern), heads, dropout);
  const Var attn_out = apply_linear(g, store, prefix + ".attn.o", ctx);
  const Var a = apply_layer_norm(g, store, prefix + ".ln1", ops::add(x, attn_out));
  Var f = ops::gelu(apply_linear(g, store, prefix + ".ffn.in", a));
  f = ops::dropout(apply_linear(g, store, prefix + ".ffn.out", f), dropout);
  return apply_layer_norm(g, store, prefix + ".ln2", ops::add(a, f));
}

double block_flops(const BlockDims& dims, double rows, double scores) {
  const double h = static_cast<double>(dims.hidden);
  const double f = static_cast<double>(dims.ffn);
  return 4.0 * h * scores + rows * (8.0 * h * h + 4.0 * h * f);
}

}  // namespace hatkit
