// Copyright 2026 The MMCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Differentiable primitives. Each function evaluates its value, records an
// adjoint, and returns the new node. Layouts are channel-last throughout:
// skeleton feature maps are [N, T, J, C], images are [N, H, W, C].

#ifndef MMCL_AUTODIFF_OPS_HPP
#define MMCL_AUTODIFF_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mmcl/autodiff/tape.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl::ad {

namespace detail {

inline void require(bool ok, const std::string& op, const std::string& msg) {
  if (!ok) throw DataError(op + ": " + msg);
}

/// Numpy-style broadcast of two shapes, aligned on trailing axes.
inline Shape broadcast_shape(const Shape& a, const Shape& b, const std::string& op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DataError(op + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

/// Element strides of `s` viewed with the rank of `out`; broadcast axes get 0.
inline std::vector<std::size_t> broadcast_strides(const Shape& s, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  for (std::size_t k = s.size(); k-- > 0;) {
    const std::size_t axis = k + (out.size() - s.size());
    strides[axis] = s[k] == 1 ? 0 : stride;
    stride *= s[k];
  }
  return strides;
}

/// Calls f(out_index, a_index, b_index) for every output element.
template <typename F>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b, F&& f) {
  const std::size_t n = shape_numel(out);
  if (a == out && b == out) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  const auto sa = broadcast_strides(a, out);
  const auto sb = broadcast_strides(b, out);
  const std::size_t rank = out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < n; ++o) {
    f(o, ia, ib);
    for (std::size_t k = rank; k-- > 0;) {
      ++idx[k];
      ia += sa[k];
      ib += sb[k];
      if (idx[k] < out[k]) break;
      ia -= sa[k] * out[k];
      ib -= sb[k] * out[k];
      idx[k] = 0;
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops with broadcasting.

inline Var add(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  Shape out_shape = detail::broadcast_shape(va.shape(), vb.shape(), "add");
  Tensor out(out_shape);
  detail::for_each_broadcast(out_shape, va.shape(), vb.shape(),
                             [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = va[i] + vb[j]; });
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_buffer(a.id);
    Tensor* gb = t.grad_buffer(b.id);
    detail::for_each_broadcast(g.shape(), t.value(a.id).shape(), t.value(b.id).shape(),
                               [&](std::size_t o, std::size_t i, std::size_t j) {
                                 if (ga) (*ga)[i] += g[o];
                                 if (gb) (*gb)[j] += g[o];
                               });
  });
}

inline Var sub(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  Shape out_shape = detail::broadcast_shape(va.shape(), vb.shape(), "sub");
  Tensor out(out_shape);
  detail::for_each_broadcast(out_shape, va.shape(), vb.shape(),
                             [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = va[i] - vb[j]; });
  return a.tape->record("sub", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_buffer(a.id);
    Tensor* gb = t.grad_buffer(b.id);
    detail::for_each_broadcast(g.shape(), t.value(a.id).shape(), t.value(b.id).shape(),
                               [&](std::size_t o, std::size_t i, std::size_t j) {
                                 if (ga) (*ga)[i] += g[o];
                                 if (gb) (*gb)[j] -= g[o];
                               });
  });
}

inline Var mul(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  Shape out_shape = detail::broadcast_shape(va.shape(), vb.shape(), "mul");
  Tensor out(out_shape);
  detail::for_each_broadcast(out_shape, va.shape(), vb.shape(),
                             [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = va[i] * vb[j]; });
  return a.tape->record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& va = t.value(a.id);
    const Tensor& vb = t.value(b.id);
    Tensor* ga = t.grad_buffer(a.id);
    Tensor* gb = t.grad_buffer(b.id);
    detail::for_each_broadcast(g.shape(), va.shape(), vb.shape(),
                               [&](std::size_t o, std::size_t i, std::size_t j) {
                                 if (ga) (*ga)[i] += g[o] * vb[j];
                                 if (gb) (*gb)[j] += g[o] * va[i];
                               });
  });
}

inline Var div(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  Shape out_shape = detail::broadcast_shape(va.shape(), vb.shape(), "div");
  Tensor out(out_shape);
  detail::for_each_broadcast(out_shape, va.shape(), vb.shape(),
                             [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = va[i] / vb[j]; });
  return a.tape->record("div", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& va = t.value(a.id);
    const Tensor& vb = t.value(b.id);
    Tensor* ga = t.grad_buffer(a.id);
    Tensor* gb = t.grad_buffer(b.id);
    detail::for_each_broadcast(g.shape(), va.shape(), vb.shape(),
                               [&](std::size_t o, std::size_t i, std::size_t j) {
                                 if (ga) (*ga)[i] += g[o] / vb[j];
                                 if (gb) (*gb)[j] -= g[o] * va[i] / (vb[j] * vb[j]);
                               });
  });
}

// ---------------------------------------------------------------------------
// Elementwise unary ops.

inline Var scale(Var x, double c) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= c;
  return x.tape->record("scale", std::move(out), {x}, [x, c](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += c * g[i];
  });
}

inline Var add_scalar(Var x, double c) {
  Tensor out = x.value();
  for (double& v : out.values()) v += c;
  return x.tape->record("add_scalar", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
  });
}

inline Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return x.tape->record("relu", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& vx = t.value(x.id);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (vx[i] > 0.0) (*gx)[i] += g[i];
    }
  });
}

inline Var exp(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::exp(v);
  const std::size_t self = x.tape->size();
  return x.tape->record("exp", std::move(out), {x}, [x, self](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] * y[i];
  });
}

inline Var log(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::log(v);
  return x.tape->record("log", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& vx = t.value(x.id);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i] / vx[i];
  });
}

/// 1 / sqrt(x), elementwise.
inline Var rsqrt(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = 1.0 / std::sqrt(v);
  const std::size_t self = x.tape->size();
  return x.tape->record("rsqrt", std::move(out), {x}, [x, self](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    const Tensor& vx = t.value(x.id);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] -= 0.5 * g[i] * y[i] / vx[i];
  });
}

// ---------------------------------------------------------------------------
// Shape ops.

inline Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape->record("reshape", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
  });
}

inline Var transpose(Var x) {
  const Tensor& v = x.value();
  detail::require(v.rank() == 2, "transpose", "needs a matrix, got " + shape_str(v.shape()));
  const std::size_t r = v.dim(0), c = v.dim(1);
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  return x.tape->record("transpose", std::move(out), {x}, [x, r, c](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*gx)[i * c + j] += g[j * r + i];
  });
}

/// [m,a] ++ [m,b] -> [m,a+b]
inline Var concat_cols(Var x, Var y) {
  const Tensor& vx = x.value();
  const Tensor& vy = y.value();
  detail::require(vx.rank() == 2 && vy.rank() == 2 && vx.dim(0) == vy.dim(0), "concat_cols",
                  "incompatible shapes " + shape_str(vx.shape()) + " and " + shape_str(vy.shape()));
  const std::size_t m = vx.dim(0), a = vx.dim(1), b = vy.dim(1);
  Tensor out(Shape{m, a + b});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(vx.data() + i * a, vx.data() + (i + 1) * a, out.data() + i * (a + b));
    std::copy(vy.data() + i * b, vy.data() + (i + 1) * b, out.data() + i * (a + b) + a);
  }
  return x.tape->record("concat_cols", std::move(out), {x, y}, [x, y, m, a, b](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    Tensor* gy = t.grad_buffer(y.id);
    for (std::size_t i = 0; i < m; ++i) {
      if (gx)
        for (std::size_t j = 0; j < a; ++j) (*gx)[i * a + j] += g[i * (a + b) + j];
      if (gy)
        for (std::size_t j = 0; j < b; ++j) (*gy)[i * b + j] += g[i * (a + b) + a + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Products.

/// [m,k] x [k,n] -> [m,n]
inline Var matmul(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  detail::require(va.rank() == 2 && vb.rank() == 2 && va.dim(1) == vb.dim(0), "matmul",
                  "incompatible shapes " + shape_str(va.shape()) + " x " + shape_str(vb.shape()));
  const std::size_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = va[i * k + p];
      const double* brow = vb.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return a.tape->record("matmul", std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    const Tensor& va = t.value(a.id);
    const Tensor& vb = t.value(b.id);
    if (Tensor* ga = t.grad_buffer(a.id)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * vb[p * n + j];
          (*ga)[i * k + p] += s;
        }
    }
    if (Tensor* gb = t.grad_buffer(b.id)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double s = va[i * k + p];
          double* grow = gb->data() + p * n;
          const double* gr = g.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += s * gr[j];
        }
    }
  });
}

/// Batched product [B,m,k] x [B,k,n] -> [B,m,n]
inline Var bmm(Var a, Var b) {
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  detail::require(va.rank() == 3 && vb.rank() == 3 && va.dim(0) == vb.dim(0) && va.dim(2) == vb.dim(1),
                  "bmm", "incompatible shapes " + shape_str(va.shape()) + " x " + shape_str(vb.shape()));
  const std::size_t nb = va.dim(0), m = va.dim(1), k = va.dim(2), n = vb.dim(2);
  Tensor out(Shape{nb, m, n});
  for (std::size_t q = 0; q < nb; ++q) {
    const double* A = va.data() + q * m * k;
    const double* B = vb.data() + q * k * n;
    double* C = out.data() + q * m * n;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) C[i * n + j] += A[i * k + p] * B[p * n + j];
  }
  return a.tape->record("bmm", std::move(out), {a, b}, [a, b, nb, m, k, n](Tape& t, const Tensor& g) {
    const Tensor& va = t.value(a.id);
    const Tensor& vb = t.value(b.id);
    Tensor* ga = t.grad_buffer(a.id);
    Tensor* gb = t.grad_buffer(b.id);
    for (std::size_t q = 0; q < nb; ++q) {
      const double* A = va.data() + q * m * k;
      const double* B = vb.data() + q * k * n;
      const double* G = g.data() + q * m * n;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            if (ga) (*ga)[q * m * k + i * k + p] += G[i * n + j] * B[p * n + j];
            if (gb) (*gb)[q * k * n + p * n + j] += A[i * k + p] * G[i * n + j];
          }
    }
  });
}

/// Applies a [k,n] weight to the last axis of x [..., k].
inline Var linear(Var x, Var w) {
  Shape s = x.shape();
  detail::require(!s.empty() && w.shape().size() == 2 && s.back() == w.shape()[0], "linear",
                  "incompatible shapes " + shape_str(s) + " x " + shape_str(w.shape()));
  const std::size_t k = s.back();
  const std::size_t rows = shape_numel(s) / k;
  Var y = matmul(reshape(x, Shape{rows, k}), w);
  s.back() = w.shape()[1];
  return reshape(y, s);
}

// ---------------------------------------------------------------------------
// Reductions.

inline Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape->record("sum", Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (double& v : gx->values()) v += g[0];
  });
}

inline Var mean(Var x) {
  const std::size_t n = x.value().numel();
  detail::require(n > 0, "mean", "empty input");
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape->record("mean", Tensor::scalar(s / static_cast<double>(n)), {x},
                        [x, n](Tape& t, const Tensor& g) {
                          Tensor* gx = t.grad_buffer(x.id);
                          const double d = g[0] / static_cast<double>(n);
                          for (double& v : gx->values()) v += d;
                        });
}

namespace detail {
/// (outer, extent, inner) factorization of a shape around one axis.
struct AxisSplit {
  std::size_t outer, extent, inner;
};
inline AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r{1, s.at(axis), 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}
}  // namespace detail

/// Sum over one axis; the axis is kept with extent 1 when keepdim.
inline Var sum_axis(Var x, std::size_t axis, bool keepdim = false) {
  const Tensor& v = x.value();
  detail::require(axis < v.rank(), "sum_axis", "axis out of range for " + shape_str(v.shape()));
  const auto sp = detail::split_axis(v.shape(), axis);
  Shape s = v.shape();
  if (keepdim) s[axis] = 1; else s.erase(s.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(s);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t e = 0; e < sp.extent; ++e)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[o * sp.inner + i] += v[(o * sp.extent + e) * sp.inner + i];
  return x.tape->record("sum_axis", std::move(out), {x}, [x, sp](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t e = 0; e < sp.extent; ++e)
        for (std::size_t i = 0; i < sp.inner; ++i)
          (*gx)[(o * sp.extent + e) * sp.inner + i] += g[o * sp.inner + i];
  });
}

inline Var mean_axis(Var x, std::size_t axis, bool keepdim = false) {
  const std::size_t extent = x.value().shape().at(axis);
  detail::require(extent > 0, "mean_axis", "empty axis");
  return scale(sum_axis(x, axis, keepdim), 1.0 / static_cast<double>(extent));
}

// ---------------------------------------------------------------------------
// Normalizations over the last axis.

inline Var softmax(Var x) {
  const Tensor& v = x.value();
  detail::require(v.rank() >= 1 && v.shape().back() > 0, "softmax", "needs a nonempty last axis");
  const std::size_t c = v.shape().back();
  const std::size_t rows = v.numel() / c;
  Tensor out(v.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = v.data() + r * c;
    double* y = out.data() + r * c;
    const double mx = *std::max_element(in, in + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  const std::size_t self = x.tape->size();
  return x.tape->record("softmax", std::move(out), {x}, [x, self, rows, c](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) (*gx)[r * c + j] += y[r * c + j] * (g[r * c + j] - dot);
    }
  });
}

inline Var log_softmax(Var x) {
  const Tensor& v = x.value();
  detail::require(v.rank() >= 1 && v.shape().back() > 0, "log_softmax", "needs a nonempty last axis");
  const std::size_t c = v.shape().back();
  const std::size_t rows = v.numel() / c;
  Tensor out(v.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = v.data() + r * c;
    const double mx = *std::max_element(in, in + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = in[j] - lse;
  }
  const std::size_t self = x.tape->size();
  return x.tape->record("log_softmax", std::move(out), {x}, [x, self, rows, c](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < c; ++j) gs += g[r * c + j];
      for (std::size_t j = 0; j < c; ++j) (*gx)[r * c + j] += g[r * c + j] - std::exp(y[r * c + j]) * gs;
    }
  });
}

/// Euclidean norm over the last axis (kept with extent 1 when keepdim).
inline Var l2norm(Var x, bool keepdim = false) {
  const Tensor& v = x.value();
  detail::require(v.rank() >= 1 && v.shape().back() > 0, "l2norm", "needs a nonempty last axis");
  const std::size_t c = v.shape().back();
  const std::size_t rows = v.numel() / c;
  Shape s = v.shape();
  if (keepdim) s.back() = 1; else s.pop_back();
  Tensor out(s);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < c; ++j) ss += v[r * c + j] * v[r * c + j];
    out[r] = std::sqrt(ss);
  }
  const std::size_t self = x.tape->size();
  return x.tape->record("l2norm", std::move(out), {x}, [x, self, rows, c](Tape& t, const Tensor& g) {
    const Tensor& vx = t.value(x.id);
    const Tensor& y = t.value(self);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      if (y[r] == 0.0) continue;  // subgradient 0 at the origin
      const double f = g[r] / y[r];
      for (std::size_t j = 0; j < c; ++j) (*gx)[r * c + j] += f * vx[r * c + j];
    }
  });
}

/// max(x, floor) elementwise; clamped entries pass no gradient.
inline Var clamp_min(Var x, double floor) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > floor ? v : floor;
  return x.tape->record("clamp_min", std::move(out), {x}, [x, floor](Tape& t, const Tensor& g) {
    const Tensor& vx = t.value(x.id);
    Tensor* gx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (vx[i] > floor) (*gx)[i] += g[i];
    }
  });
}

/// Floor on every norm in cosine similarity, so a zero row maps to zero
/// while any other row is normalized exactly.
inline constexpr double kNormGuard = 1e-12;

/// Rows of x scaled to unit length: x / max(||x||, kNormGuard).
inline Var normalize_rows(Var x) {
  return div(x, clamp_min(l2norm(x, /*keepdim=*/true), kNormGuard));
}

/// Cosine similarity of two equal-length vectors; returns a scalar node.
inline Var cosine_similarity(Var a, Var b) {
  detail::require(a.shape().size() == 1 && a.shape() == b.shape(), "cosine_similarity",
                  "needs two vectors of equal length, got " + shape_str(a.shape()) + " and " +
                      shape_str(b.shape()));
  return sum(mul(normalize_rows(a), normalize_rows(b)));
}

/// Pairwise cosine similarities of the rows of a [N,d] and b [M,d] -> [N,M].
inline Var cosine_matrix(Var a, Var b) {
  return matmul(normalize_rows(a), transpose(normalize_rows(b)));
}

// ---------------------------------------------------------------------------
// Graph and convolution kernels.

/// Spatial joint mixing: y[n,t,i,c] = sum_j adj[i,j] * x[n,t,j,c].
inline Var graph_mix(Var adj, Var x) {
  const Tensor& A = adj.value();
  const Tensor& X = x.value();
  detail::require(X.rank() == 4, "graph_mix", "features must be [N,T,J,C], got " + shape_str(X.shape()));
  const std::size_t J = X.dim(2), C = X.dim(3);
  detail::require(A.rank() == 2 && A.dim(0) == J && A.dim(1) == J, "graph_mix",
                  "adjacency " + shape_str(A.shape()) + " does not match " + std::to_string(J) + " joints");
  const std::size_t frames = X.dim(0) * X.dim(1);
  Tensor out(X.shape());
  for (std::size_t f = 0; f < frames; ++f) {
    const double* xf = X.data() + f * J * C;
    double* yf = out.data() + f * J * C;
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        const double a = A[i * J + j];
        for (std::size_t c = 0; c < C; ++c) yf[i * C + c] += a * xf[j * C + c];
      }
  }
  return adj.tape->record("graph_mix", std::move(out), {adj, x},
                          [adj, x, frames, J, C](Tape& t, const Tensor& g) {
    const Tensor& A = t.value(adj.id);
    const Tensor& X = t.value(x.id);
    Tensor* gA = t.grad_buffer(adj.id);
    Tensor* gX = t.grad_buffer(x.id);
    for (std::size_t f = 0; f < frames; ++f) {
      const double* xf = X.data() + f * J * C;
      const double* gf = g.data() + f * J * C;
      for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) {
          if (gX) {
            const double a = A[i * J + j];
            double* gxf = gX->data() + f * J * C + j * C;
            for (std::size_t c = 0; c < C; ++c) gxf[c] += a * gf[i * C + c];
          }
          if (gA) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += gf[i * C + c] * xf[j * C + c];
            (*gA)[i * J + j] += s;
          }
        }
    }
  });
}

/// Temporal convolution with zero "same" padding (K-1)/2:
/// y[n,to,j,co] = sum_k sum_ci x[n, to*stride + k - pad, j, ci] * w[k,ci,co].
inline Var temporal_conv(Var x, Var w, std::size_t stride = 1) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  detail::require(X.rank() == 4, "temporal_conv", "features must be [N,T,J,C], got " + shape_str(X.shape()));
  detail::require(W.rank() == 3 && W.dim(1) == X.dim(3), "temporal_conv",
                  "kernel " + shape_str(W.shape()) + " does not match input " + shape_str(X.shape()));
  const std::size_t K = W.dim(0);
  if (K % 2 == 0) throw ConfigError("temporal_conv: kernel size must be odd, got " + std::to_string(K));
  if (stride == 0) throw ConfigError("temporal_conv: stride must be positive");
  const std::size_t N = X.dim(0), T = X.dim(1), J = X.dim(2), Ci = X.dim(3), Co = W.dim(2);
  const std::size_t pad = (K - 1) / 2;
  const std::size_t To = (T + 2 * pad - K) / stride + 1;
  Tensor out(Shape{N, To, J, Co});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t to = 0; to < To; ++to)
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(to * stride + k) - static_cast<std::ptrdiff_t>(pad);
        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
        for (std::size_t j = 0; j < J; ++j) {
          const double* xr = X.data() + ((n * T + static_cast<std::size_t>(ti)) * J + j) * Ci;
          double* yr = out.data() + ((n * To + to) * J + j) * Co;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double xv = xr[ci];
            const double* wr = W.data() + (k * Ci + ci) * Co;
            for (std::size_t co = 0; co < Co; ++co) yr[co] += xv * wr[co];
          }
        }
      }
  return x.tape->record("temporal_conv", std::move(out), {x, w},
                        [x, w, N, T, J, Ci, Co, K, pad, To, stride](Tape& t, const Tensor& g) {
    const Tensor& X = t.value(x.id);
    const Tensor& W = t.value(w.id);
    Tensor* gX = t.grad_buffer(x.id);
    Tensor* gW = t.grad_buffer(w.id);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t to = 0; to < To; ++to)
        for (std::size_t k = 0; k < K; ++k) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(to * stride + k) - static_cast<std::ptrdiff_t>(pad);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
          for (std::size_t j = 0; j < J; ++j) {
            const std::size_t xo = ((n * T + static_cast<std::size_t>(ti)) * J + j) * Ci;
            const double* gr = g.data() + ((n * To + to) * J + j) * Co;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const double* wr = W.data() + (k * Ci + ci) * Co;
              if (gX) {
                double s = 0.0;
                for (std::size_t co = 0; co < Co; ++co) s += gr[co] * wr[co];
                (*gX)[xo + ci] += s;
              }
              if (gW) {
                const double xv = X[xo + ci];
                double* gwr = gW->data() + (k * Ci + ci) * Co;
                for (std::size_t co = 0; co < Co; ++co) gwr[co] += xv * gr[co];
              }
            }
          }
        }
  });
}

/// 2D convolution on [N,H,W,Ci] with kernel [KH,KW,Ci,Co], zero padding `pad`.
inline Var conv2d(Var x, Var w, std::size_t stride, std::size_t pad) {
  const Tensor& X = x.value();
  const Tensor& Wt = w.value();
  detail::require(X.rank() == 4, "conv2d", "images must be [N,H,W,C], got " + shape_str(X.shape()));
  detail::require(Wt.rank() == 4 && Wt.dim(2) == X.dim(3), "conv2d",
                  "kernel " + shape_str(Wt.shape()) + " does not match input " + shape_str(X.shape()));
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t N = X.dim(0), H = X.dim(1), Wd = X.dim(2), Ci = X.dim(3);
  const std::size_t KH = Wt.dim(0), KW = Wt.dim(1), Co = Wt.dim(3);
  detail::require(H + 2 * pad >= KH && Wd + 2 * pad >= KW, "conv2d", "kernel larger than padded input");
  const std::size_t Ho = (H + 2 * pad - KH) / stride + 1;
  const std::size_t Wo = (Wd + 2 * pad - KW) / stride + 1;
  Tensor out(Shape{N, Ho, Wo, Co});
  auto in_range = [](std::ptrdiff_t v, std::size_t hi) { return v >= 0 && v < static_cast<std::ptrdiff_t>(hi); };
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        double* yr = out.data() + ((n * Ho + oy) * Wo + ox) * Co;
        for (std::size_t ky = 0; ky < KH; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          if (!in_range(iy, H)) continue;
          for (std::size_t kx = 0; kx < KW; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (!in_range(ix, Wd)) continue;
            const double* xr = X.data() + ((n * H + static_cast<std::size_t>(iy)) * Wd + static_cast<std::size_t>(ix)) * Ci;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const double xv = xr[ci];
              const double* wr = Wt.data() + ((ky * KW + kx) * Ci + ci) * Co;
              for (std::size_t co = 0; co < Co; ++co) yr[co] += xv * wr[co];
            }
          }
        }
      }
  return x.tape->record("conv2d", std::move(out), {x, w},
                        [=](Tape& t, const Tensor& g) {
    const Tensor& X = t.value(x.id);
    const Tensor& Wt = t.value(w.id);
    Tensor* gX = t.grad_buffer(x.id);
    Tensor* gW = t.grad_buffer(w.id);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
          const double* gr = g.data() + ((n * Ho + oy) * Wo + ox) * Co;
          for (std::size_t ky = 0; ky < KH; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (!in_range(iy, H)) continue;
            for (std::size_t kx = 0; kx < KW; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
              if (!in_range(ix, Wd)) continue;
              const std::size_t xo = ((n * H + static_cast<std::size_t>(iy)) * Wd + static_cast<std::size_t>(ix)) * Ci;
              for (std::size_t ci = 0; ci < Ci; ++ci) {
                const std::size_t wo = ((ky * KW + kx) * Ci + ci) * Co;
                if (gX) {
                  double s = 0.0;
                  for (std::size_t co = 0; co < Co; ++co) s += gr[co] * Wt[wo + co];
                  (*gX)[xo + ci] += s;
                }
                if (gW) {
                  const double xv = X[xo + ci];
                  for (std::size_t co = 0; co < Co; ++co) (*gW)[wo + co] += xv * gr[co];
                }
              }
            }
          }
        }
  });
}

// ---------------------------------------------------------------------------
// Losses built from the primitives above.

/// Mean cross-entropy of softmax(scores [N,C]) against integer labels.
inline Var cross_entropy(Var scores, const std::vector<std::size_t>& labels) {
  const Shape& s = scores.shape();
  detail::require(s.size() == 2 && s[0] == labels.size(), "cross_entropy",
                  "scores " + shape_str(s) + " do not match " + std::to_string(labels.size()) + " labels");
  Tensor onehot(s);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::require(labels[i] < s[1], "cross_entropy", "label " + std::to_string(labels[i]) + " out of range");
    onehot[i * s[1] + labels[i]] = 1.0;
  }
  Var picked = mul(log_softmax(scores), scores.tape->constant(std::move(onehot)));
  return scale(sum(picked), -1.0 / static_cast<double>(labels.size()));
}

}  // namespace mmcl::ad

#endif  // MMCL_AUTODIFF_OPS_HPP
