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

#include "hatkit/attention.h"

#include <cmath>
#include <limits>

#include "eigen_util.h"
#include "hatkit/error.h"
#include "hatkit/random.h"

namespace hatkit {
namespace {

thread_local ScoreCounter* g_active_counter = nullptr;

using internal::ConstStridedMap;
using internal::RowMatrix;
using internal::StridedMap;

}  // namespace

AttentionPattern AttentionPattern::dense(std::size_t group_size, std::vector<std::uint8_t> key_valid) {
  AttentionPattern p;
  p.group_size = group_size;
  p.key_valid = std::move(key_valid);
  return p;
}

ScoreCounter::ScoreCounter() : previous_(g_active_counter) { g_active_counter = this; }
ScoreCounter::~ScoreCounter() { g_active_counter = previous_; }

void ScoreCounter::record(std::uint64_t n) {
  if (g_active_counter) g_active_counter->count_ += n;
}

namespace ops {
namespace {

struct AttentionState {
  std::shared_ptr<const AttentionPattern> pattern;
  std::size_t heads = 0;
  float scale = 1.0f;
  // Dense: [groups, heads, S, S]. Sparse: per group, heads x nnz.
  Tensor probs;
  Tensor keep;  // dropout multipliers, same layout as probs; empty = none
  std::vector<std::size_t> sparse_offsets;  // per group start in probs
};

void check_inputs(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionPattern& p,
                  std::size_t heads) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.rank() != 2) {
    throw DimensionError("attention: q, k, v must share a [rows x H] shape");
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw DimensionError("attention: hidden size " + std::to_string(q.cols()) +
                         " not divisible by heads " + std::to_string(heads));
  }
  if (p.group_size == 0 || q.rows() % p.group_size != 0) {
    throw DimensionError("attention: rows not divisible by group size");
  }
  if (p.key_valid.size() != q.rows()) throw DimensionError("attention: key mask size mismatch");
  const std::size_t s = p.group_size;
  if (!p.pair_allowed.empty() && p.pair_allowed.size() != s * s &&
      p.pair_allowed.size() != q.rows() * s) {
    throw DimensionError("attention: pair mask must be group_size^2 per group or shared");
  }
  if (p.is_sparse()) {
    const std::size_t groups = q.rows() / s;
    if (p.sparse.size() != 1 && p.sparse.size() != groups) {
      throw DimensionError("attention: need one sparse layout per group");
    }
    for (const auto& sp : p.sparse) {
      if (sp.row_ptr.size() != s + 1 || sp.row_ptr.back() != sp.cols.size()) {
        throw DimensionError("attention: malformed sparse layout");
      }
      for (std::uint32_t c : sp.cols) {
        if (c >= s) throw DimensionError("attention: sparse key index out of range");
      }
    }
  }
}

// Softmax in place over scores[0..n) restricted to allowed entries;
// disallowed entries become 0. A row with nothing allowed stays all-zero.
template <typename Allowed>
void masked_softmax(float* scores, std::size_t n, Allowed allowed) {
  float mx = -std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    if (allowed(c) && scores[c] > mx) mx = scores[c];
  }
  if (mx == -std::numeric_limits<float>::infinity()) {
    for (std::size_t c = 0; c < n; ++c) scores[c] = 0.0f;
    return;
  }
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (allowed(c)) {
      scores[c] = std::exp(scores[c] - mx);
      total += scores[c];
    } else {
      scores[c] = 0.0f;
    }
  }
  const float inv = static_cast<float>(1.0 / total);
  for (std::size_t c = 0; c < n; ++c) scores[c] *= inv;
}

void fill_dropout(Tensor& keep, float rate, Rng& rng) {
  const float kept = 1.0f / (1.0f - rate);
  for (float& k : keep.values()) k = uniform01(rng) < rate ? 0.0f : kept;
}

Tensor dense_forward(const Tensor& q, const Tensor& k, const Tensor& v, AttentionState& st,
                     bool dropout, float rate, Rng& rng) {
  const AttentionPattern& p = *st.pattern;
  const std::size_t s = p.group_size, hidden = q.cols(), d = hidden / st.heads;
  const std::size_t groups = q.rows() / s;
  st.probs = Tensor({groups * st.heads * s * s});
  if (dropout) {
    st.keep = Tensor(st.probs.shape());
    fill_dropout(st.keep, rate, rng);
  }
  Tensor out(q.shape());
  const Eigen::OuterStride<> stride(hidden);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::uint8_t* kv = p.key_valid.data() + g * s;
    const std::uint8_t* group_pairs = nullptr;
    if (!p.pair_allowed.empty()) {
      group_pairs = p.pair_allowed.data() + (p.pair_allowed.size() == s * s ? 0 : g * s * s);
    }
    for (std::size_t h = 0; h < st.heads; ++h) {
      const std::size_t off = g * s * hidden + h * d;
      ConstStridedMap qg(q.data() + off, s, d, stride);
      ConstStridedMap kg(k.data() + off, s, d, stride);
      ConstStridedMap vg(v.data() + off, s, d, stride);
      float* pr = st.probs.data() + (g * st.heads + h) * s * s;
      internal::MatrixMap scores(pr, s, s);
      scores.noalias() = (qg * kg.transpose()) * st.scale;
      for (std::size_t r = 0; r < s; ++r) {
        const std::uint8_t* pair = group_pairs ? group_pairs + r * s : nullptr;
        masked_softmax(pr + r * s, s, [&](std::size_t c) { return kv[c] && (!pair || pair[c]); });
      }
      StridedMap og(out.data() + off, s, d, stride);
      if (dropout) {
        internal::ConstMatrixMap keep(st.keep.data() + (g * st.heads + h) * s * s, s, s);
        og.noalias() = scores.cwiseProduct(keep) * vg;
      } else {
        og.noalias() = scores * vg;
      }
    }
  }
  ScoreCounter::record(static_cast<std::uint64_t>(groups) * s * s);
  return out;
}

void dense_backward(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& dout,
                    const AttentionState& st, Tensor* dq, Tensor* dk, Tensor* dv) {
  const AttentionPattern& p = *st.pattern;
  const std::size_t s = p.group_size, hidden = q.cols(), d = hidden / st.heads;
  const std::size_t groups = q.rows() / s;
  const Eigen::OuterStride<> stride(hidden);
  RowMatrix dp(s, s), pd(s, s);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < st.heads; ++h) {
      const std::size_t off = g * s * hidden + h * d;
      ConstStridedMap qg(q.data() + off, s, d, stride);
      ConstStridedMap kg(k.data() + off, s, d, stride);
      ConstStridedMap vg(v.data() + off, s, d, stride);
      ConstStridedMap dog(dout.data() + off, s, d, stride);
      internal::ConstMatrixMap prob(st.probs.data() + (g * st.heads + h) * s * s, s, s);
      if (!st.keep.empty()) {
        internal::ConstMatrixMap keep(st.keep.data() + (g * st.heads + h) * s * s, s, s);
        pd = prob.cwiseProduct(keep);
        dp.noalias() = (dog * vg.transpose()).cwiseProduct(keep);
      } else {
        pd = prob;
        dp.noalias() = dog * vg.transpose();
      }
      if (dv) StridedMap(dv->data() + off, s, d, stride).noalias() += pd.transpose() * dog;
      // dS = P * (dP - rowsum(P * dP))
      const Eigen::VectorXf row_dot = prob.cwiseProduct(dp).rowwise().sum();
      dp = prob.cwiseProduct(dp.colwise() - row_dot) * st.scale;
      if (dq) StridedMap(dq->data() + off, s, d, stride).noalias() += dp * kg;
      if (dk) StridedMap(dk->data() + off, s, d, stride).noalias() += dp.transpose() * qg;
    }
  }
}

float dot(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

Tensor sparse_forward(const Tensor& q, const Tensor& k, const Tensor& v, AttentionState& st,
                      bool dropout, float rate, Rng& rng) {
  const AttentionPattern& p = *st.pattern;
  const std::size_t s = p.group_size, hidden = q.cols(), d = hidden / st.heads;
  const std::size_t groups = q.rows() / s;
  st.sparse_offsets.resize(groups + 1);
  std::size_t total = 0;
  std::uint64_t pairs = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    st.sparse_offsets[g] = total;
    const std::size_t nnz = p.sparse_for_group(g).cols.size();
    total += nnz * st.heads;
    pairs += nnz;
  }
  st.sparse_offsets[groups] = total;
  st.probs = Tensor({std::max<std::size_t>(total, 1)});
  if (dropout) {
    st.keep = Tensor(st.probs.shape());
    fill_dropout(st.keep, rate, rng);
  }
  Tensor out(q.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& sp = p.sparse_for_group(g);
    const std::uint8_t* kv = p.key_valid.data() + g * s;
    const std::size_t nnz = sp.cols.size();
    for (std::size_t h = 0; h < st.heads; ++h) {
      float* pr = st.probs.data() + st.sparse_offsets[g] + h * nnz;
      const float* keep = dropout ? st.keep.data() + st.sparse_offsets[g] + h * nnz : nullptr;
      const std::size_t base = g * s * hidden + h * d;
      for (std::size_t r = 0; r < s; ++r) {
        const std::size_t b = sp.row_ptr[r], e = sp.row_ptr[r + 1];
        const float* qr = q.data() + base + r * hidden;
        for (std::size_t i = b; i < e; ++i) {
          pr[i] = kv[sp.cols[i]] ? dot(qr, k.data() + base + sp.cols[i] * hidden, d) * st.scale : 0.0f;
        }
        masked_softmax(pr + b, e - b, [&](std::size_t c) { return kv[sp.cols[b + c]] != 0; });
        float* orow = out.data() + base + r * hidden;
        for (std::size_t i = b; i < e; ++i) {
          const float w = keep ? pr[i] * keep[i] : pr[i];
          if (w == 0.0f) continue;
          const float* vr = v.data() + base + sp.cols[i] * hidden;
          for (std::size_t c = 0; c < d; ++c) orow[c] += w * vr[c];
        }
      }
    }
  }
  ScoreCounter::record(pairs);
  return out;
}

void sparse_backward(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& dout,
                     const AttentionState& st, Tensor* dq, Tensor* dk, Tensor* dv) {
  const AttentionPattern& p = *st.pattern;
  const std::size_t s = p.group_size, hidden = q.cols(), d = hidden / st.heads;
  const std::size_t groups = q.rows() / s;
  std::vector<float> dp;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& sp = p.sparse_for_group(g);
    const std::size_t nnz = sp.cols.size();
    for (std::size_t h = 0; h < st.heads; ++h) {
      const float* pr = st.probs.data() + st.sparse_offsets[g] + h * nnz;
      const float* keep = st.keep.empty() ? nullptr : st.keep.data() + st.sparse_offsets[g] + h * nnz;
      const std::size_t base = g * s * hidden + h * d;
      for (std::size_t r = 0; r < s; ++r) {
        const std::size_t b = sp.row_ptr[r], e = sp.row_ptr[r + 1];
        const float* dor = dout.data() + base + r * hidden;
        dp.assign(e - b, 0.0f);
        double row_dot = 0.0;
        for (std::size_t i = b; i < e; ++i) {
          if (pr[i] == 0.0f) continue;
          const std::size_t col = sp.cols[i];
          const float kk = keep ? keep[i] : 1.0f;
          if (dv && kk != 0.0f) {
            float* dvr = dv->data() + base + col * hidden;
            const float w = pr[i] * kk;
            for (std::size_t c = 0; c < d; ++c) dvr[c] += w * dor[c];
          }
          dp[i - b] = dot(dor, v.data() + base + col * hidden, d) * kk;
          row_dot += static_cast<double>(pr[i]) * dp[i - b];
        }
        const float* qr = q.data() + base + r * hidden;
        float* dqr = dq ? dq->data() + base + r * hidden : nullptr;
        for (std::size_t i = b; i < e; ++i) {
          if (pr[i] == 0.0f) continue;
          const float ds = pr[i] * (dp[i - b] - static_cast<float>(row_dot)) * st.scale;
          const std::size_t col = sp.cols[i];
          if (dqr) {
            const float* kr = k.data() + base + col * hidden;
            for (std::size_t c = 0; c < d; ++c) dqr[c] += ds * kr[c];
          }
          if (dk) {
            float* dkr = dk->data() + base + col * hidden;
            for (std::size_t c = 0; c < d; ++c) dkr[c] += ds * qr[c];
          }
        }
      }
    }
  }
}

}  // namespace

Var attention(Var q, Var k, Var v, std::shared_ptr<const AttentionPattern> pattern, std::size_t heads,
              float dropout_rate) {
  Graph& g = *q.graph();
  if (k.graph() != &g || v.graph() != &g) throw ContractError("attention: mixed graphs");
  if (!pattern) throw ContractError("attention: missing pattern");
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  check_inputs(Q, K, V, *pattern, heads);
  auto st = std::make_shared<AttentionState>();
  st->pattern = std::move(pattern);
  st->heads = heads;
  st->scale = 1.0f / std::sqrt(static_cast<float>(Q.cols() / heads));
  const bool dropout = g.training() && dropout_rate > 0.0f;
  Tensor out = st->pattern->is_sparse() ? sparse_forward(Q, K, V, *st, dropout, dropout_rate, g.rng())
                                        : dense_forward(Q, K, V, *st, dropout, dropout_rate, g.rng());
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return g.record(std::move(out), {iq, ik, iv}, [iq, ik, iv, st](Graph& g, int self) {
    Tensor* dq = g.requires_grad(iq) ? &g.grad_buffer(iq) : nullptr;
    Tensor* dk = g.requires_grad(ik) ? &g.grad_buffer(ik) : nullptr;
    Tensor* dv = g.requires_grad(iv) ? &g.grad_buffer(iv) : nullptr;
    if (st->pattern->is_sparse()) {
      sparse_backward(g.value(iq), g.value(ik), g.value(iv), g.grad(self), *st, dq, dk, dv);
    } else {
      dense_backward(g.value(iq), g.value(ik), g.value(iv), g.grad(self), *st, dq, dk, dv);
    }
  });
}

}  // namespace ops
}  // namespace hatkit
