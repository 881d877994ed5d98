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

#include "hatkit/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eigen_util.h"
#include "hatkit/error.h"
#include "hatkit/random.h"

namespace hatkit::ops {
namespace {

using internal::mat;

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an empty Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw ContractError("operands belong to different graphs");
  return g;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void accumulate(Graph& g, int id, const Tensor& delta) {
  if (!g.requires_grad(id)) return;
  Tensor& dst = g.grad_buffer(id);
  float* d = dst.data();
  const float* s = delta.data();
  for (std::size_t i = 0; i < delta.size(); ++i) d[i] += s[i];
}

Shape with_last_dim(const Shape& shape, std::size_t last) {
  Shape out = shape;
  out.back() = last;
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (B.rank() != 2 || A.cols() != B.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(A.shape()) + " * " +
                         shape_string(B.shape()));
  }
  Tensor C(with_last_dim(A.shape(), B.dim(1)));
  mat(C).noalias() = mat(A) * mat(B);
  const int ia = a.id(), ib = b.id();
  return g.record(std::move(C), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dC = g.grad(self);
    if (g.requires_grad(ia)) mat(g.grad_buffer(ia)).noalias() += mat(dC) * mat(g.value(ib)).transpose();
    if (g.requires_grad(ib)) mat(g.grad_buffer(ib)).noalias() += mat(g.value(ia)).transpose() * mat(dC);
  });
}

Var matmul_transposed(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (B.rank() != 2 || A.cols() != B.dim(1)) {
    throw DimensionError("matmul_transposed: inner dimensions disagree " + shape_string(A.shape()) +
                         " * " + shape_string(B.shape()) + "^T");
  }
  Tensor C(with_last_dim(A.shape(), B.dim(0)));
  mat(C).noalias() = mat(A) * mat(B).transpose();
  const int ia = a.id(), ib = b.id();
  return g.record(std::move(C), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& dC = g.grad(self);
    if (g.requires_grad(ia)) mat(g.grad_buffer(ia)).noalias() += mat(dC) * mat(g.value(ib));
    if (g.requires_grad(ib)) mat(g.grad_buffer(ib)).noalias() += mat(dC).transpose() * mat(g.value(ia));
  });
}

Var linear(Var x, Var weight, Var bias) {
  Graph& g = graph_of(x, weight);
  if (bias.graph() != &g) throw ContractError("linear: bias belongs to another graph");
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  const Tensor& b = bias.value();
  if (W.rank() != 2 || X.cols() != W.dim(0) || b.size() != W.dim(1)) {
    throw DimensionError("linear: incompatible shapes x" + shape_string(X.shape()) + " w" +
                         shape_string(W.shape()) + " b" + shape_string(b.shape()));
  }
  Tensor Y(with_last_dim(X.shape(), W.dim(1)));
  auto y = mat(Y);
  y.noalias() = mat(X) * mat(W);
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.data(), b.size());
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return g.record(std::move(Y), {ix, iw, ib}, [ix, iw, ib](Graph& g, int self) {
    const Tensor& dY = g.grad(self);
    if (g.requires_grad(ix)) mat(g.grad_buffer(ix)).noalias() += mat(dY) * mat(g.value(iw)).transpose();
    if (g.requires_grad(iw)) mat(g.grad_buffer(iw)).noalias() += mat(g.value(ix)).transpose() * mat(dY);
    if (g.requires_grad(ib)) {
      Tensor& db = g.grad_buffer(ib);
      Eigen::Map<Eigen::RowVectorXf>(db.data(), db.size()) += mat(dY).colwise().sum();
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const float* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    accumulate(g, ia, g.grad(self));
    accumulate(g, ib, g.grad(self));
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const float* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    accumulate(g, ia, g.grad(self));
    if (g.requires_grad(ib)) {
      Tensor& d = g.grad_buffer(ib);
      const Tensor& up = g.grad(self);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= up[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const float* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    // Snapshot values first: ia == ib (x * x) must see both contributions.
    const Tensor& av = g.value(ia);
    const Tensor& bv = g.value(ib);
    if (g.requires_grad(ia)) {
      Tensor d(av.shape());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[i] * bv[i];
      accumulate(g, ia, d);
    }
    if (g.requires_grad(ib)) {
      Tensor d(bv.shape());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[i] * av[i];
      accumulate(g, ib, d);
    }
  });
}

Var scale(Var a, float factor) {
  Graph& g = graph_of(a);
  Tensor out = a.value();
  for (float& v : out.values()) v *= factor;
  const int ia = a.id();
  return g.record(std::move(out), {ia}, [ia, factor](Graph& g, int self) {
    Tensor& d = g.grad_buffer(ia);
    const Tensor& up = g.grad(self);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * up[i];
  });
}

Var add_row(Var x, Var row) {
  Graph& g = graph_of(x, row);
  const Tensor& X = x.value();
  const Tensor& r = row.value();
  if (r.size() != X.cols()) {
    throw DimensionError("add_row: row of " + std::to_string(r.size()) + " for " +
                         shape_string(X.shape()));
  }
  Tensor out = X;
  mat(out).rowwise() += Eigen::Map<const Eigen::RowVectorXf>(r.data(), r.size());
  const int ix = x.id(), ir = row.id();
  return g.record(std::move(out), {ix, ir}, [ix, ir](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    accumulate(g, ix, up);
    if (g.requires_grad(ir)) {
      Tensor& d = g.grad_buffer(ir);
      Eigen::Map<Eigen::RowVectorXf>(d.data(), d.size()) += mat(up).colwise().sum();
    }
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  double acc = 0.0;
  for (float v : a.value().values()) acc += v;
  const int ia = a.id();
  return g.record(Tensor::scalar(static_cast<float>(acc)), {ia}, [ia](Graph& g, int self) {
    const float up = g.grad(self)[0];
    Tensor& d = g.grad_buffer(ia);
    for (float& v : d.values()) v += up;
  });
}

Var mean(Var a) {
  Graph& g = graph_of(a);
  double acc = 0.0;
  for (float v : a.value().values()) acc += v;
  const double n = static_cast<double>(a.value().size());
  const int ia = a.id();
  return g.record(Tensor::scalar(static_cast<float>(acc / n)), {ia}, [ia, n](Graph& g, int self) {
    const float up = static_cast<float>(g.grad(self)[0] / n);
    Tensor& d = g.grad_buffer(ia);
    for (float& v : d.values()) v += up;
  });
}

namespace {

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2 / pi)
constexpr float kGeluA = 0.044715f;

}  // namespace

Var gelu(Var x) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  const auto xa = Eigen::Map<const Eigen::ArrayXf>(X.data(), static_cast<Eigen::Index>(X.size()));
  Tensor t(X.shape());
  auto ta = Eigen::Map<Eigen::ArrayXf>(t.data(), static_cast<Eigen::Index>(t.size()));
  ta = (kGeluC * (xa + kGeluA * xa.cube())).tanh();
  Tensor out(X.shape());
  Eigen::Map<Eigen::ArrayXf>(out.data(), static_cast<Eigen::Index>(out.size())) = 0.5f * xa * (1.0f + ta);
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix, t = std::move(t)](Graph& g, int self) {
    const Tensor& X = g.value(ix);
    const Eigen::Index n = static_cast<Eigen::Index>(X.size());
    const auto xa = Eigen::Map<const Eigen::ArrayXf>(X.data(), n);
    const auto ta = Eigen::Map<const Eigen::ArrayXf>(t.data(), n);
    const auto up = Eigen::Map<const Eigen::ArrayXf>(g.grad(self).data(), n);
    auto d = Eigen::Map<Eigen::ArrayXf>(g.grad_buffer(ix).data(), n);
    const auto dt = (1.0f - ta.square()) * kGeluC * (1.0f + 3.0f * kGeluA * xa.square());
    d += up * (0.5f * (1.0f + ta) + 0.5f * xa * dt);
  });
}

Var tanh(Var x) {
  Graph& g = graph_of(x);
  Tensor out(x.value().shape());
  Eigen::Map<Eigen::ArrayXf>(out.data(), static_cast<Eigen::Index>(out.size())) =
      Eigen::Map<const Eigen::ArrayXf>(x.value().data(), static_cast<Eigen::Index>(out.size())).tanh();
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(ix);
    for (std::size_t i = 0; i < y.size(); ++i) d[i] += up[i] * (1.0f - y[i] * y[i]);
  });
}

Var softmax_rows(Var x) {
  Graph& g = graph_of(x);
  Tensor out = x.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = out.data() + r * cols;
    const float mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      total += row[c];
    }
    const float inv = static_cast<float>(1.0 / total);
    for (std::size_t c = 0; c < cols; ++c) row[c] *= inv;
  }
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, int self) {
    const Tensor& y = g.value(self);
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(ix);
    const std::size_t rows = y.rows(), cols = y.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      const float* yr = y.data() + r * cols;
      const float* ur = up.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += static_cast<double>(yr[c]) * ur[c];
      float* dr = d.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dr[c] += yr[c] * (ur[c] - static_cast<float>(dot));
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, float eps) {
  Graph& g = graph_of(x, gain);
  const Tensor& X = x.value();
  const std::size_t rows = X.rows(), h = X.cols();
  if (gain.value().size() != h || bias.value().size() != h) {
    throw DimensionError("layer_norm: gain/bias size must equal last dimension " + std::to_string(h));
  }
  Tensor normalized(X.shape());
  Tensor inv_std({rows});
  Tensor out(X.shape());
  const float* gv = gain.value().data();
  const float* bv = bias.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = X.data() + r * h;
    double m = 0.0;
    for (std::size_t c = 0; c < h; ++c) m += xr[c];
    m /= static_cast<double>(h);
    double var = 0.0;
    for (std::size_t c = 0; c < h; ++c) var += (xr[c] - m) * (xr[c] - m);
    var /= static_cast<double>(h);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = static_cast<float>(is);
    float* nr = normalized.data() + r * h;
    float* orow = out.data() + r * h;
    for (std::size_t c = 0; c < h; ++c) {
      nr[c] = static_cast<float>((xr[c] - m) * is);
      orow[c] = gv[c] * nr[c] + bv[c];
    }
  }
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return g.record(std::move(out), {ix, ig, ib},
                  [ix, ig, ib, normalized = std::move(normalized), inv_std = std::move(inv_std)](
                      Graph& g, int self) {
                    const Tensor& up = g.grad(self);
                    const std::size_t rows = normalized.rows(), h = normalized.cols();
                    const float* gv = g.value(ig).data();
                    if (g.requires_grad(ig) || g.requires_grad(ib)) {
                      Tensor& dg = g.grad_buffer(ig);
                      Tensor& db = g.grad_buffer(ib);
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t c = 0; c < h; ++c) {
                          dg[c] += up[r * h + c] * normalized[r * h + c];
                          db[c] += up[r * h + c];
                        }
                      }
                    }
                    if (!g.requires_grad(ix)) return;
                    Tensor& dx = g.grad_buffer(ix);
                    for (std::size_t r = 0; r < rows; ++r) {
                      const float* nr = normalized.data() + r * h;
                      const float* ur = up.data() + r * h;
                      double mean_d = 0.0, mean_dn = 0.0;
                      for (std::size_t c = 0; c < h; ++c) {
                        const double dn = static_cast<double>(ur[c]) * gv[c];
                        mean_d += dn;
                        mean_dn += dn * nr[c];
                      }
                      mean_d /= static_cast<double>(h);
                      mean_dn /= static_cast<double>(h);
                      float* dr = dx.data() + r * h;
                      for (std::size_t c = 0; c < h; ++c) {
                        const double dn = static_cast<double>(ur[c]) * gv[c];
                        dr[c] += static_cast<float>(inv_std[r] * (dn - mean_d - nr[c] * mean_dn));
                      }
                    }
                  });
}

Var dropout(Var x, float rate) {
  Graph& g = graph_of(x);
  if (!g.training() || rate <= 0.0f) return x;
  if (rate >= 1.0f) throw ConfigError("dropout rate must be < 1");
  Tensor keep(x.value().shape());
  const float scale_kept = 1.0f / (1.0f - rate);
  for (float& k : keep.values()) k = uniform01(g.rng()) < rate ? 0.0f : scale_kept;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= keep[i];
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix, keep = std::move(keep)](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i] * keep[i];
  });
}

Var gather_rows(Var table, std::span<const std::int32_t> ids) {
  Graph& g = graph_of(table);
  const Tensor& T = table.value();
  const std::size_t h = T.cols(), n_rows = T.rows();
  if (ids.empty()) throw DimensionError("gather_rows: empty index list");
  Tensor out({ids.size(), h});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= n_rows) {
      throw ContractError("gather_rows: index " + std::to_string(ids[i]) + " out of range [0," +
                          std::to_string(n_rows) + ")");
    }
    std::copy_n(T.data() + ids[i] * h, h, out.data() + i * h);
  }
  const int it = table.id();
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return g.record(std::move(out), {it}, [it, idx = std::move(idx)](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(it);
    const std::size_t h = d.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      float* dr = d.data() + idx[i] * h;
      const float* ur = up.data() + i * h;
      for (std::size_t c = 0; c < h; ++c) dr[c] += ur[c];
    }
  });
}

Var scatter_rows(Var base, std::span<const std::int32_t> idx, Var values) {
  Graph& g = graph_of(base, values);
  const Tensor& B = base.value();
  const Tensor& V = values.value();
  const std::size_t h = B.cols();
  if (V.cols() != h || V.rows() != idx.size()) {
    throw DimensionError("scatter_rows: values " + shape_string(V.shape()) + " for " +
                         std::to_string(idx.size()) + " rows of width " + std::to_string(h));
  }
  Tensor out = B;
  std::vector<std::uint8_t> replaced(B.rows(), 0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= B.rows()) {
      throw ContractError("scatter_rows: index out of range");
    }
    if (replaced[idx[i]]) throw ContractError("scatter_rows: duplicate target row");
    replaced[idx[i]] = 1;
    std::copy_n(V.data() + i * h, h, out.data() + idx[i] * h);
  }
  const int ib = base.id(), iv = values.id();
  std::vector<std::int32_t> rows(idx.begin(), idx.end());
  return g.record(std::move(out), {ib, iv},
                  [ib, iv, rows = std::move(rows), replaced = std::move(replaced)](Graph& g, int self) {
                    const Tensor& up = g.grad(self);
                    const std::size_t h = up.cols();
                    if (g.requires_grad(ib)) {
                      Tensor& d = g.grad_buffer(ib);
                      for (std::size_t r = 0; r < replaced.size(); ++r) {
                        if (replaced[r]) continue;
                        for (std::size_t c = 0; c < h; ++c) d[r * h + c] += up[r * h + c];
                      }
                    }
                    if (g.requires_grad(iv)) {
                      Tensor& d = g.grad_buffer(iv);
                      for (std::size_t i = 0; i < rows.size(); ++i) {
                        for (std::size_t c = 0; c < h; ++c) d[i * h + c] += up[rows[i] * h + c];
                      }
                    }
                  });
}

Var max_pool_groups(Var x, std::size_t group_size, std::span<const std::uint8_t> valid) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  const std::size_t rows = X.rows(), h = X.cols();
  if (group_size == 0 || rows % group_size != 0 || valid.size() != rows) {
    throw DimensionError("max_pool_groups: rows must split into groups with one mask entry each");
  }
  const std::size_t groups = rows / group_size;
  Tensor out({groups, h});
  std::vector<std::uint32_t> arg(groups * h);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    bool any = false;
    for (std::size_t r = gi * group_size; r < (gi + 1) * group_size; ++r) {
      if (!valid[r]) continue;
      for (std::size_t c = 0; c < h; ++c) {
        const float v = X[r * h + c];
        if (!any || v > out[gi * h + c]) {
          out[gi * h + c] = v;
          arg[gi * h + c] = static_cast<std::uint32_t>(r);
        }
      }
      any = true;
    }
    if (!any) throw ContractError("max_pool_groups: group without valid rows");
  }
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix, arg = std::move(arg)](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(ix);
    const std::size_t h = up.cols();
    for (std::size_t i = 0; i < arg.size(); ++i) d[arg[i] * h + i % h] += up[i];
  });
}

Var reshape(Var x, Shape shape) {
  Graph& g = graph_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  const int ix = x.id();
  return g.record(std::move(out), {ix}, [ix](Graph& g, int self) {
    const Tensor& up = g.grad(self);
    Tensor& d = g.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += up[i];
  });
}

Var cross_entropy(Var logits, std::span<const std::int32_t> targets, int ignore_index) {
  Graph& g = graph_of(logits);
  const Tensor& L = logits.value();
  const std::size_t rows = L.rows(), classes = L.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(rows) + " rows");
  }
  Tensor probs(L.shape());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == ignore_index) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= classes) {
      throw ContractError("cross_entropy: target " + std::to_string(targets[r]) + " out of range");
    }
    const float* lr = L.data() + r * classes;
    const float mx = *std::max_element(lr, lr + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(static_cast<double>(lr[c] - mx));
    const double log_z = std::log(z) + mx;
    total += log_z - lr[targets[r]];
    float* pr = probs.data() + r * classes;
    for (std::size_t c = 0; c < classes; ++c) pr[c] = static_cast<float>(std::exp(lr[c] - log_z));
    ++count;
  }
  if (count == 0) throw EmptyBatchError("cross_entropy: every position is ignored");
  const int il = logits.id();
  std::vector<std::int32_t> tgt(targets.begin(), targets.end());
  return g.record(Tensor::scalar(static_cast<float>(total / count)), {il},
                  [il, count, ignore_index, tgt = std::move(tgt), probs = std::move(probs)](Graph& g,
                                                                                           int self) {
                    const float up = g.grad(self)[0] / static_cast<float>(count);
                    Tensor& d = g.grad_buffer(il);
                    const std::size_t classes = probs.cols();
                    for (std::size_t r = 0; r < tgt.size(); ++r) {
                      if (tgt[r] == ignore_index) continue;
                      float* dr = d.data() + r * classes;
                      const float* pr = probs.data() + r * classes;
                      for (std::size_t c = 0; c < classes; ++c) dr[c] += up * pr[c];
                      dr[tgt[r]] -= up;
                    }
                  });
}

namespace {

Var regression_loss(Var pred, std::span<const float> target, std::span<const std::uint8_t> mask,
                    bool squared) {
  Graph& g = graph_of(pred);
  const Tensor& P = pred.value();
  if (P.size() != target.size() || mask.size() != target.size()) {
    throw DimensionError("regression loss: prediction, target and mask sizes differ");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (!mask[i]) continue;
    const double diff = static_cast<double>(P[i]) - target[i];
    total += squared ? diff * diff : std::abs(diff);
    ++count;
  }
  if (count == 0) throw EmptyBatchError("regression loss: empty mask");
  const int ip = pred.id();
  std::vector<float> tgt(target.begin(), target.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return g.record(Tensor::scalar(static_cast<float>(total / count)), {ip},
                  [ip, count, squared, tgt = std::move(tgt), m = std::move(m)](Graph& g, int self) {
                    const float up = g.grad(self)[0] / static_cast<float>(count);
                    const Tensor& P = g.value(ip);
                    Tensor& d = g.grad_buffer(ip);
                    for (std::size_t i = 0; i < tgt.size(); ++i) {
                      if (!m[i]) continue;
                      const float diff = P[i] - tgt[i];
                      if (squared) {
                        d[i] += up * 2.0f * diff;
                      } else {
                        d[i] += up * static_cast<float>((diff > 0) - (diff < 0));
                      }
                    }
                  });
}

}  // namespace

Var l1_loss(Var pred, std::span<const float> target, std::span<const std::uint8_t> mask) {
  return regression_loss(pred, target, mask, false);
}

Var mse_loss(Var pred, std::span<const float> target, std::span<const std::uint8_t> mask) {
  return regression_loss(pred, target, mask, true);
}

}  // namespace hatkit::ops
