// SPDX-FileCopyrightText: Copyright (c) 2026 The pgen Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pgen/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace pgen::ad {
namespace {

template <class T>
T dot(const T* a, const T* b, int n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <class T>
void axpy(T alpha, const T* x, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
std::string shape_str(const Array<T>& a) {
  return "(" + std::to_string(a.rows) + ", " + std::to_string(a.cols) + ")";
}

template <class T>
void require_same(const Var<T>& a, const Var<T>& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs "
                     + shape_str(b.value()));
}

template <class T>
Var<T> linear_impl(Var<T> x, Var<T> w, const Var<T>* b) {
  Tape<T>& t = *x.tape;
  const Array<T>& X = x.value();
  const Array<T>& W = w.value();
  if (X.cols != W.cols)
    throw ShapeError("linear: input channel axis has " + std::to_string(X.cols)
                     + " entries, weight expects " + std::to_string(W.cols));
  if (b != nullptr && (b->value().rows != 1 || b->value().cols != W.rows))
    throw ShapeError("linear: bias shape " + shape_str(b->value()) + " does not match "
                     + std::to_string(W.rows) + " outputs");
  const int n = X.rows, in = X.cols, out = W.rows;
  Array<T> Y(n, out);
  for (int r = 0; r < n; ++r) {
    const T* xr = &X.data[static_cast<std::size_t>(r) * in];
    T* yr = &Y.data[static_cast<std::size_t>(r) * out];
    for (int o = 0; o < out; ++o) yr[o] = dot(xr, &W.data[static_cast<std::size_t>(o) * in], in);
    if (b != nullptr)
      for (int o = 0; o < out; ++o) yr[o] += b->value().data[o];
  }
  const int bid = b != nullptr ? b->id : -1;
  auto fn = [xi = x.id, wi = w.id, bid, n, in, out](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    if (tp.needs_grad(xi)) {
      Array<T>& dX = tp.grad(xi);
      const Array<T>& Wv = tp.value(wi);
      for (int r = 0; r < n; ++r)
        for (int o = 0; o < out; ++o) {
          const T g = G.data[static_cast<std::size_t>(r) * out + o];
          if (g != T(0))
            axpy(g, &Wv.data[static_cast<std::size_t>(o) * in],
                 &dX.data[static_cast<std::size_t>(r) * in], in);
        }
    }
    if (tp.needs_grad(wi)) {
      Array<T>& dW = tp.grad(wi);
      const Array<T>& Xv = tp.value(xi);
      for (int r = 0; r < n; ++r)
        for (int o = 0; o < out; ++o) {
          const T g = G.data[static_cast<std::size_t>(r) * out + o];
          if (g != T(0))
            axpy(g, &Xv.data[static_cast<std::size_t>(r) * in],
                 &dW.data[static_cast<std::size_t>(o) * in], in);
        }
    }
    if (bid >= 0 && tp.needs_grad(bid)) {
      Array<T>& dB = tp.grad(bid);
      for (int r = 0; r < n; ++r)
        for (int o = 0; o < out; ++o) dB.data[o] += G.data[static_cast<std::size_t>(r) * out + o];
    }
  };
  if (b != nullptr) return t.push("linear", std::move(Y), {x.id, w.id, b->id}, fn);
  return t.push("linear", std::move(Y), {x.id, w.id}, fn);
}

template <class T>
Var<T> unary(const char* op, Var<T> x, T (*f)(T), T (*df)(T, T)) {
  const Array<T>& X = x.value();
  Array<T> Y(X.rows, X.cols);
  for (std::size_t i = 0; i < X.size(); ++i) Y.data[i] = f(X.data[i]);
  return x.tape->push(op, std::move(Y), {x.id}, [xi = x.id, df](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Xv = tp.value(xi);
    const Array<T>& Yv = tp.value(self);
    Array<T>& dX = tp.grad(xi);
    for (std::size_t i = 0; i < G.size(); ++i) dX.data[i] += G.data[i] * df(Xv.data[i], Yv.data[i]);
  });
}

template <class T>
T sigmoid_scalar(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

}  // namespace

template <class T>
Var<T> linear(Var<T> x, Var<T> w) {
  return linear_impl<T>(x, w, nullptr);
}

template <class T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  return linear_impl<T>(x, w, &b);
}

template <class T>
Var<T> vec_linear(Var<T> x, Var<T> w) {
  const Array<T>& X = x.value();
  const Array<T>& W = w.value();
  if (X.cols % 3 != 0) throw ShapeError("vec_linear: vector block width is not a multiple of 3");
  const int n = X.rows, in = X.cols / 3, out = W.rows;
  if (W.cols != in)
    throw ShapeError("vec_linear: input vector channel axis has " + std::to_string(in)
                     + " channels, weight expects " + std::to_string(W.cols));
  Array<T> Y(n, out * 3);
  for (int r = 0; r < n; ++r) {
    const T* xr = &X.data[static_cast<std::size_t>(r) * in * 3];
    T* yr = &Y.data[static_cast<std::size_t>(r) * out * 3];
    for (int o = 0; o < out; ++o) {
      const T* wr = &W.data[static_cast<std::size_t>(o) * in];
      T a0 = 0, a1 = 0, a2 = 0;
      for (int c = 0; c < in; ++c) {
        a0 += wr[c] * xr[3 * c];
        a1 += wr[c] * xr[3 * c + 1];
        a2 += wr[c] * xr[3 * c + 2];
      }
      yr[3 * o] = a0;
      yr[3 * o + 1] = a1;
      yr[3 * o + 2] = a2;
    }
  }
  return x.tape->push("vec_linear", std::move(Y), {x.id, w.id},
                      [xi = x.id, wi = w.id, n, in, out](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const bool gx = tp.needs_grad(xi), gw = tp.needs_grad(wi);
    const Array<T>& Xv = tp.value(xi);
    const Array<T>& Wv = tp.value(wi);
    Array<T>* dX = gx ? &tp.grad(xi) : nullptr;
    Array<T>* dW = gw ? &tp.grad(wi) : nullptr;
    for (int r = 0; r < n; ++r) {
      const T* gr = &G.data[static_cast<std::size_t>(r) * out * 3];
      const T* xr = &Xv.data[static_cast<std::size_t>(r) * in * 3];
      for (int o = 0; o < out; ++o) {
        const T g0 = gr[3 * o], g1 = gr[3 * o + 1], g2 = gr[3 * o + 2];
        const T* wr = &Wv.data[static_cast<std::size_t>(o) * in];
        if (gx) {
          T* dxr = &dX->data[static_cast<std::size_t>(r) * in * 3];
          for (int c = 0; c < in; ++c) {
            dxr[3 * c] += wr[c] * g0;
            dxr[3 * c + 1] += wr[c] * g1;
            dxr[3 * c + 2] += wr[c] * g2;
          }
        }
        if (gw) {
          T* dwr = &dW->data[static_cast<std::size_t>(o) * in];
          for (int c = 0; c < in; ++c)
            dwr[c] += g0 * xr[3 * c] + g1 * xr[3 * c + 1] + g2 * xr[3 * c + 2];
        }
      }
    }
  });
}

template <class T>
Var<T> vec_norm(Var<T> x) {
  const Array<T>& X = x.value();
  if (X.cols % 3 != 0) throw ShapeError("vec_norm: vector block width is not a multiple of 3");
  const int c = X.cols / 3;
  Array<T> Y(X.rows, c);
  Tape<T>& t = *x.tape;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const T* v = &X.data[3 * i];
    Y.data[i] = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    // A vector crossing the origin changes the sign of its largest component;
    // collinear channels (in_vector == 1) do this routinely.
    int big = 0;
    for (int d = 1; d < 3; ++d)
      if (std::abs(v[d]) > std::abs(v[big])) big = d;
    t.note_kink(v[big] >= 0);
  }
  return x.tape->push("vec_norm", std::move(Y), {x.id}, [xi = x.id](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Yv = tp.value(self);
    const Array<T>& Xv = tp.value(xi);
    Array<T>& dX = tp.grad(xi);
    for (std::size_t i = 0; i < G.size(); ++i) {
      if (Yv.data[i] == T(0)) continue;  // zero subgradient at the origin
      const T s = G.data[i] / Yv.data[i];
      for (int d = 0; d < 3; ++d) dX.data[3 * i + d] += s * Xv.data[3 * i + d];
    }
  });
}

template <class T>
Var<T> gate(Var<T> g, Var<T> v) {
  const Array<T>& Gt = g.value();
  const Array<T>& V = v.value();
  if (V.rows != Gt.rows || V.cols != Gt.cols * 3)
    throw ShapeError("gate: gate " + shape_str(Gt) + " does not cover vector block " + shape_str(V));
  Array<T> Y(V.rows, V.cols);
  for (std::size_t i = 0; i < Gt.size(); ++i)
    for (int d = 0; d < 3; ++d) Y.data[3 * i + d] = Gt.data[i] * V.data[3 * i + d];
  return g.tape->push("gate", std::move(Y), {g.id, v.id}, [gi = g.id, vi = v.id](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Gv = tp.value(gi);
    const Array<T>& Vv = tp.value(vi);
    if (tp.needs_grad(gi)) {
      Array<T>& dG = tp.grad(gi);
      for (std::size_t i = 0; i < Gv.size(); ++i)
        dG.data[i] += G.data[3 * i] * Vv.data[3 * i] + G.data[3 * i + 1] * Vv.data[3 * i + 1]
                      + G.data[3 * i + 2] * Vv.data[3 * i + 2];
    }
    if (tp.needs_grad(vi)) {
      Array<T>& dV = tp.grad(vi);
      for (std::size_t i = 0; i < Gv.size(); ++i)
        for (int d = 0; d < 3; ++d) dV.data[3 * i + d] += Gv.data[i] * G.data[3 * i + d];
    }
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same(a, b, "add");
  Array<T> Y = a.value();
  const Array<T>& B = b.value();
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] += B.data[i];
  return a.tape->push("add", std::move(Y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    for (int id : {ai, bi}) {
      if (!tp.needs_grad(id)) continue;
      Array<T>& d = tp.grad(id);
      for (std::size_t i = 0; i < G.size(); ++i) d.data[i] += G.data[i];
    }
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same(a, b, "sub");
  Array<T> Y = a.value();
  const Array<T>& B = b.value();
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] -= B.data[i];
  return a.tape->push("sub", std::move(Y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    if (tp.needs_grad(ai)) {
      Array<T>& d = tp.grad(ai);
      for (std::size_t i = 0; i < G.size(); ++i) d.data[i] += G.data[i];
    }
    if (tp.needs_grad(bi)) {
      Array<T>& d = tp.grad(bi);
      for (std::size_t i = 0; i < G.size(); ++i) d.data[i] -= G.data[i];
    }
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same(a, b, "mul");
  Array<T> Y = a.value();
  const Array<T>& B = b.value();
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] *= B.data[i];
  return a.tape->push("mul", std::move(Y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Av = tp.value(ai);
    const Array<T>& Bv = tp.value(bi);
    if (tp.needs_grad(ai)) {
      Array<T>& d = tp.grad(ai);
      for (std::size_t i = 0; i < G.size(); ++i) d.data[i] += G.data[i] * Bv.data[i];
    }
    if (tp.needs_grad(bi)) {
      Array<T>& d = tp.grad(bi);
      for (std::size_t i = 0; i < G.size(); ++i) d.data[i] += G.data[i] * Av.data[i];
    }
  });
}

template <class T>
Var<T> scale(Var<T> a, T c) {
  Array<T> Y = a.value();
  for (T& y : Y.data) y *= c;
  return a.tape->push("scale", std::move(Y), {a.id}, [ai = a.id, c](Tape<T>& tp, int self) {
    if (!tp.needs_grad(ai)) return;
    const Array<T>& G = tp.grad(self);
    Array<T>& d = tp.grad(ai);
    for (std::size_t i = 0; i < G.size(); ++i) d.data[i] += c * G.data[i];
  });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
  return unary<T>("sigmoid", x, [](T z) { return sigmoid_scalar(z); },
                  [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> leaky_relu(Var<T> x, T slope) {
  const Array<T>& X = x.value();
  Array<T> Y(X.rows, X.cols);
  Tape<T>& t = *x.tape;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const bool pos = X.data[i] >= T(0);
    t.note_kink(pos);
    Y.data[i] = pos ? X.data[i] : slope * X.data[i];
  }
  return t.push("leaky_relu", std::move(Y), {x.id}, [xi = x.id, slope](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Xv = tp.value(xi);
    Array<T>& d = tp.grad(xi);
    for (std::size_t i = 0; i < G.size(); ++i)
      d.data[i] += Xv.data[i] >= T(0) ? G.data[i] : slope * G.data[i];
  });
}

template <class T>
Var<T> exp(Var<T> x) {
  return unary<T>("exp", x, [](T z) { return std::exp(z); }, [](T, T y) { return y; });
}

template <class T>
Var<T> log(Var<T> x) {
  return unary<T>("log", x, [](T z) { return std::log(z); }, [](T z, T) { return T(1) / z; });
}

template <class T>
Var<T> softmax_rows(Var<T> x) {
  const Array<T>& X = x.value();
  Array<T> Y(X.rows, X.cols);
  for (int r = 0; r < X.rows; ++r) {
    auto xr = X.row(r);
    auto yr = Y.row(r);
    const T m = *std::max_element(xr.begin(), xr.end());
    T s = 0;
    for (int c = 0; c < X.cols; ++c) s += (yr[c] = std::exp(xr[c] - m));
    for (int c = 0; c < X.cols; ++c) yr[c] /= s;
  }
  return x.tape->push("softmax", std::move(Y), {x.id}, [xi = x.id](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Yv = tp.value(self);
    Array<T>& d = tp.grad(xi);
    for (int r = 0; r < G.rows; ++r) {
      const T s = dot(&G.data[static_cast<std::size_t>(r) * G.cols],
                      &Yv.data[static_cast<std::size_t>(r) * G.cols], G.cols);
      for (int c = 0; c < G.cols; ++c) d(r, c) += Yv(r, c) * (G(r, c) - s);
    }
  });
}

template <class T>
Var<T> log_softmax_rows(Var<T> x) {
  const Array<T>& X = x.value();
  Array<T> Y(X.rows, X.cols);
  for (int r = 0; r < X.rows; ++r) {
    auto xr = X.row(r);
    const T m = *std::max_element(xr.begin(), xr.end());
    T s = 0;
    for (T v : xr) s += std::exp(v - m);
    const T lse = m + std::log(s);
    for (int c = 0; c < X.cols; ++c) Y(r, c) = xr[c] - lse;
  }
  return x.tape->push("log_softmax", std::move(Y), {x.id}, [xi = x.id](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Yv = tp.value(self);
    Array<T>& d = tp.grad(xi);
    for (int r = 0; r < G.rows; ++r) {
      T s = 0;
      for (int c = 0; c < G.cols; ++c) s += G(r, c);
      for (int c = 0; c < G.cols; ++c) d(r, c) += G(r, c) - std::exp(Yv(r, c)) * s;
    }
  });
}

template <class T>
Var<T> logsumexp_rows(Var<T> x) {
  const Array<T>& X = x.value();
  if (X.cols < 1) throw ShapeError("logsumexp: empty row");
  Array<T> Y(X.rows, 1);
  for (int r = 0; r < X.rows; ++r) {
    auto xr = X.row(r);
    const T m = *std::max_element(xr.begin(), xr.end());
    T s = 0;
    for (T v : xr) s += std::exp(v - m);
    Y.data[r] = m + std::log(s);
  }
  return x.tape->push("logsumexp", std::move(Y), {x.id}, [xi = x.id](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    const Array<T>& Yv = tp.value(self);
    const Array<T>& Xv = tp.value(xi);
    Array<T>& d = tp.grad(xi);
    for (int r = 0; r < Xv.rows; ++r)
      for (int c = 0; c < Xv.cols; ++c) d(r, c) += G.data[r] * std::exp(Xv(r, c) - Yv.data[r]);
  });
}

template <class T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  std::vector<int> ids, widths;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ShapeError("concat_cols: row counts differ (" + std::to_string(rows) + " vs "
                       + std::to_string(p.rows()) + ")");
    cols += p.cols();
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  Array<T> Y(rows, cols);
  for (int r = 0; r < rows; ++r) {
    int off = 0;
    for (const auto& p : parts) {
      auto src = p.value().row(r);
      std::copy(src.begin(), src.end(), Y.data.begin() + static_cast<std::ptrdiff_t>(r) * cols + off);
      off += p.cols();
    }
  }
  return parts[0].tape->push("concat_cols", std::move(Y), std::span<const int>(ids),
                             [ids, widths, rows, cols](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    int off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (tp.needs_grad(ids[p])) {
        Array<T>& d = tp.grad(ids[p]);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < widths[p]; ++c)
            d.data[static_cast<std::size_t>(r) * widths[p] + c] +=
                G.data[static_cast<std::size_t>(r) * cols + off + c];
      }
      off += widths[p];
    }
  });
}

template <class T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  std::vector<int> ids, starts;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    starts.push_back(rows);
    rows += p.rows();
    ids.push_back(p.id);
  }
  Array<T> Y(rows, cols);
  for (std::size_t p = 0; p < parts.size(); ++p)
    std::copy(parts[p].value().data.begin(), parts[p].value().data.end(),
              Y.data.begin() + static_cast<std::ptrdiff_t>(starts[p]) * cols);
  return parts[0].tape->push("concat_rows", std::move(Y), std::span<const int>(ids),
                             [ids, starts, cols](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (!tp.needs_grad(ids[p])) continue;
      Array<T>& d = tp.grad(ids[p]);
      const std::size_t base = static_cast<std::size_t>(starts[p]) * cols;
      for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += G.data[base + i];
    }
  });
}

template <class T>
Var<T> slice_cols(Var<T> x, int begin, int end) {
  const Array<T>& X = x.value();
  if (begin < 0 || end > X.cols || begin >= end)
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end)
                     + ") outside " + std::to_string(X.cols) + " columns");
  const int w = end - begin;
  Array<T> Y(X.rows, w);
  for (int r = 0; r < X.rows; ++r)
    for (int c = 0; c < w; ++c) Y(r, c) = X(r, begin + c);
  return x.tape->push("slice_cols", std::move(Y), {x.id}, [xi = x.id, begin, w](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    Array<T>& d = tp.grad(xi);
    for (int r = 0; r < G.rows; ++r)
      for (int c = 0; c < w; ++c) d(r, begin + c) += G(r, c);
  });
}

template <class T>
Var<T> gather_rows(Var<T> x, std::span<const int> index) {
  const Array<T>& X = x.value();
  const int cols = X.cols;
  Array<T> Y(static_cast<int>(index.size()), cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= X.rows) throw ShapeError("gather_rows: index out of range");
    std::copy_n(X.data.begin() + static_cast<std::ptrdiff_t>(index[r]) * cols, cols,
                Y.data.begin() + static_cast<std::ptrdiff_t>(r) * cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  return x.tape->push("gather_rows", std::move(Y), {x.id}, [xi = x.id, idx = std::move(idx), cols](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    Array<T>& d = tp.grad(xi);
    for (std::size_t r = 0; r < idx.size(); ++r)
      axpy(T(1), &G.data[r * cols], &d.data[static_cast<std::size_t>(idx[r]) * cols], cols);
  });
}

template <class T>
Var<T> scatter_add_rows(Var<T> x, std::span<const int> index, int rows) {
  const Array<T>& X = x.value();
  if (static_cast<int>(index.size()) != X.rows)
    throw ShapeError("scatter_add_rows: index length differs from row count");
  const int cols = X.cols;
  Array<T> Y(rows, cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= rows) throw ShapeError("scatter_add_rows: index out of range");
    axpy(T(1), &X.data[r * cols], &Y.data[static_cast<std::size_t>(index[r]) * cols], cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  return x.tape->push("scatter_add_rows", std::move(Y), {x.id}, [xi = x.id, idx = std::move(idx), cols](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Array<T>& G = tp.grad(self);
    Array<T>& d = tp.grad(xi);
    for (std::size_t r = 0; r < idx.size(); ++r)
      axpy(T(1), &G.data[static_cast<std::size_t>(idx[r]) * cols], &d.data[r * cols], cols);
  });
}

template <class T>
Var<T> sum_all(Var<T> x) {
  T s = 0;
  for (T v : x.value().data) s += v;
  Array<T> Y(1, 1, s);
  return x.tape->push("sum", std::move(Y), {x.id}, [xi = x.id](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const T g = tp.grad(self).data[0];
    for (T& d : tp.grad(xi).data) d += g;
  });
}

template <class T>
Var<T> mean_all(Var<T> x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean_all: empty input");
  T s = 0;
  for (T v : x.value().data) s += v;
  Array<T> Y(1, 1, s / static_cast<T>(n));
  return x.tape->push("mean", std::move(Y), {x.id}, [xi = x.id, n](Tape<T>& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const T g = tp.grad(self).data[0] / static_cast<T>(n);
    for (T& d : tp.grad(xi).data) d += g;
  });
}

template <class T>
Var<T> frobenius_rows(Var<T> a, Var<T> b) {
  require_same(a, b, "frobenius_rows");
  const Array<T>& A = a.value();
  const Array<T>& B = b.value();
  Array<T> Y(A.rows, 1);
  for (int r = 0; r < A.rows; ++r)
    Y.data[r] = dot(&A.data[static_cast<std::size_t>(r) * A.cols],
                    &B.data[static_cast<std::size_t>(r) * A.cols], A.cols);
  return a.tape->push("frobenius", std::move(Y), {a.id, b.id}, [ai = a.id, bi = b.id](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Av = tp.value(ai);
    const Array<T>& Bv = tp.value(bi);
    const int cols = Av.cols;
    if (tp.needs_grad(ai)) {
      Array<T>& d = tp.grad(ai);
      for (int r = 0; r < Av.rows; ++r)
        axpy(G.data[r], &Bv.data[static_cast<std::size_t>(r) * cols],
             &d.data[static_cast<std::size_t>(r) * cols], cols);
    }
    if (tp.needs_grad(bi)) {
      Array<T>& d = tp.grad(bi);
      for (int r = 0; r < Av.rows; ++r)
        axpy(G.data[r], &Av.data[static_cast<std::size_t>(r) * cols],
             &d.data[static_cast<std::size_t>(r) * cols], cols);
    }
  });
}

template <class T>
Var<T> diag_gaussian_log_density(Var<T> x, Var<T> mu, Var<T> log_var) {
  const Array<T>& X = x.value();
  const Array<T>& M = mu.value();
  const Array<T>& S = log_var.value();
  if (X.cols != 3) throw ShapeError("diag_gaussian_log_density: points must be 3-vectors");
  require_same(mu, log_var, "diag_gaussian_log_density");
  if (M.rows != X.rows || M.cols % 3 != 0)
    throw ShapeError("diag_gaussian_log_density: component block " + shape_str(M)
                     + " does not match points " + shape_str(X));
  const int n = X.rows, k = M.cols / 3;
  const T log2pi = static_cast<T>(std::log(2.0 * std::numbers::pi));
  Array<T> Y(n, k);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < k; ++c) {
      T acc = 0;
      for (int d = 0; d < 3; ++d) {
        const T diff = X(r, d) - M(r, 3 * c + d);
        const T s = S(r, 3 * c + d);
        acc += log2pi + s + diff * diff * std::exp(-s);
      }
      Y(r, c) = T(-0.5) * acc;
    }
  return x.tape->push("gaussian_log_density", std::move(Y), {x.id, mu.id, log_var.id},
                      [xi = x.id, mi = mu.id, si = log_var.id, n, k](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Xv = tp.value(xi);
    const Array<T>& Mv = tp.value(mi);
    const Array<T>& Sv = tp.value(si);
    const bool gx = tp.needs_grad(xi), gm = tp.needs_grad(mi), gs = tp.needs_grad(si);
    Array<T>* dX = gx ? &tp.grad(xi) : nullptr;
    Array<T>* dM = gm ? &tp.grad(mi) : nullptr;
    Array<T>* dS = gs ? &tp.grad(si) : nullptr;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < k; ++c) {
        const T g = G(r, c);
        for (int d = 0; d < 3; ++d) {
          const T diff = Xv(r, d) - Mv(r, 3 * c + d);
          const T inv = std::exp(-Sv(r, 3 * c + d));
          if (gx) (*dX)(r, d) -= g * diff * inv;
          if (gm) (*dM)(r, 3 * c + d) += g * diff * inv;
          if (gs) (*dS)(r, 3 * c + d) += g * T(-0.5) * (T(1) - diff * diff * inv);
        }
      }
  });
}

template <class T>
Var<T> vec_leaky_relu(Var<T> v, Var<T> direction, T slope) {
  require_same(v, direction, "vec_leaky_relu");
  const Array<T>& Vv = v.value();
  const Array<T>& K = direction.value();
  if (Vv.cols % 3 != 0) throw ShapeError("vec_leaky_relu: vector block width is not a multiple of 3");
  Tape<T>& t = *v.tape;
  const std::size_t channels = Vv.size() / 3;
  // branch: 0 = identity (non-negative half-space), 1 = leaked, 2 = degenerate direction
  std::vector<unsigned char> branch(channels, 0);
  const T tiny = std::numeric_limits<T>::min() * T(1e6);
  const T eps2 = std::numeric_limits<T>::epsilon() * std::numeric_limits<T>::epsilon();
  Array<T> Y = Vv;
  for (std::size_t i = 0; i < channels; ++i) {
    const T* x = &Vv.data[3 * i];
    const T* k = &K.data[3 * i];
    const T kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    const T xx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    // Directions this short relative to the vector have no usable unit vector.
    if (kk <= tiny || kk <= eps2 * xx) {
      branch[i] = 2;
      t.degenerate_directions += 1;
      continue;
    }
    const T xk = x[0] * k[0] + x[1] * k[1] + x[2] * k[2];
    t.note_kink(xk >= 0);
    if (xk >= 0) continue;
    branch[i] = 1;
    const T f = (T(1) - slope) * xk / kk;
    for (int d = 0; d < 3; ++d) Y.data[3 * i + d] = x[d] - f * k[d];
  }
  return t.push("vec_leaky_relu", std::move(Y), {v.id, direction.id},
                [vi = v.id, ki = direction.id, slope, branch = std::move(branch)](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Xv = tp.value(vi);
    const Array<T>& Kv = tp.value(ki);
    const bool gv = tp.needs_grad(vi), gk = tp.needs_grad(ki);
    Array<T>* dV = gv ? &tp.grad(vi) : nullptr;
    Array<T>* dK = gk ? &tp.grad(ki) : nullptr;
    const T beta = T(1) - slope;
    for (std::size_t i = 0; i < branch.size(); ++i) {
      const T* g = &G.data[3 * i];
      if (branch[i] != 1) {
        if (gv)
          for (int d = 0; d < 3; ++d) dV->data[3 * i + d] += g[d];
        continue;
      }
      const T* x = &Xv.data[3 * i];
      const T* k = &Kv.data[3 * i];
      const T kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
      const T xk = x[0] * k[0] + x[1] * k[1] + x[2] * k[2];
      const T gk_dot = g[0] * k[0] + g[1] * k[1] + g[2] * k[2];
      if (gv)
        for (int d = 0; d < 3; ++d) dV->data[3 * i + d] += g[d] - beta * gk_dot * k[d] / kk;
      if (gk)
        for (int d = 0; d < 3; ++d)
          dK->data[3 * i + d] -=
              beta * ((gk_dot * x[d] + xk * g[d]) / kk - T(2) * xk * gk_dot * k[d] / (kk * kk));
    }
  });
}

template <class T>
Var<T> segment_attention(Var<T> q, Var<T> k, Var<T> v, Var<T> bias, std::span<const int> offsets,
                         int heads, T scale, Array<T>* weights_out) {
  require_same(q, k, "segment_attention");
  require_same(q, v, "segment_attention");
  const Array<T>& Q = q.value();
  const Array<T>& K = k.value();
  const Array<T>& Vv = v.value();
  const Array<T>& B = bias.value();
  const int D = Q.cols;
  if (heads < 1 || D % heads != 0)
    throw ShapeError("segment_attention: " + std::to_string(D) + " columns do not split into "
                     + std::to_string(heads) + " heads");
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != Q.rows)
    throw ShapeError("segment_attention: segment offsets do not cover the rows");
  std::size_t pairs = 0;
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t n = static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
    pairs += n * n;
  }
  if (B.rows != static_cast<int>(pairs) || B.cols != heads)
    throw ShapeError("segment_attention: bias shape " + shape_str(B) + " expected ("
                     + std::to_string(pairs) + ", " + std::to_string(heads) + ")");
  const int dh = D / heads;
  Array<T> W(static_cast<int>(pairs), heads);
  Array<T> Y(Q.rows, D);
  std::size_t base = 0;
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const int o = offsets[s], n = offsets[s + 1] - offsets[s];
    for (int qi = 0; qi < n; ++qi)
      for (int h = 0; h < heads; ++h) {
        T m = -std::numeric_limits<T>::infinity();
        for (int ki = 0; ki < n; ++ki) {
          const T a = scale * dot(&Q.data[static_cast<std::size_t>(o + qi) * D + h * dh],
                                  &K.data[static_cast<std::size_t>(o + ki) * D + h * dh], dh)
                      + B(static_cast<int>(base + qi * n + ki), h);
          W(static_cast<int>(base + qi * n + ki), h) = a;
          m = std::max(m, a);
        }
        T z = 0;
        for (int ki = 0; ki < n; ++ki) {
          T& w = W(static_cast<int>(base + qi * n + ki), h);
          w = std::exp(w - m);
          z += w;
        }
        for (int ki = 0; ki < n; ++ki) {
          T& w = W(static_cast<int>(base + qi * n + ki), h);
          w /= z;
          axpy(w, &Vv.data[static_cast<std::size_t>(o + ki) * D + h * dh],
               &Y.data[static_cast<std::size_t>(o + qi) * D + h * dh], dh);
        }
      }
    base += static_cast<std::size_t>(n) * n;
  }
  if (weights_out != nullptr) *weights_out = W;
  std::vector<int> offs(offsets.begin(), offsets.end());
  return q.tape->push("segment_attention", std::move(Y), {q.id, k.id, v.id, bias.id},
                      [qi_ = q.id, ki_ = k.id, vi_ = v.id, bi_ = bias.id, offs = std::move(offs),
                       W = std::move(W), heads, dh, D, scale](Tape<T>& tp, int self) {
    const Array<T>& G = tp.grad(self);
    const Array<T>& Qv = tp.value(qi_);
    const Array<T>& Kv = tp.value(ki_);
    const Array<T>& Vv2 = tp.value(vi_);
    const bool gq = tp.needs_grad(qi_), gk = tp.needs_grad(ki_), gv = tp.needs_grad(vi_),
               gb = tp.needs_grad(bi_);
    Array<T>* dQ = gq ? &tp.grad(qi_) : nullptr;
    Array<T>* dK = gk ? &tp.grad(ki_) : nullptr;
    Array<T>* dV = gv ? &tp.grad(vi_) : nullptr;
    Array<T>* dB = gb ? &tp.grad(bi_) : nullptr;
    std::vector<T> dw, da;
    std::size_t base2 = 0;
    for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
      const int o = offs[s], n = offs[s + 1] - offs[s];
      dw.assign(n, T(0));
      da.assign(n, T(0));
      for (int qi = 0; qi < n; ++qi)
        for (int h = 0; h < heads; ++h) {
          const T* g = &G.data[static_cast<std::size_t>(o + qi) * D + h * dh];
          T sum = 0;
          for (int ki = 0; ki < n; ++ki) {
            const T w = W(static_cast<int>(base2 + qi * n + ki), h);
            dw[ki] = dot(g, &Vv2.data[static_cast<std::size_t>(o + ki) * D + h * dh], dh);
            sum += w * dw[ki];
            if (gv) axpy(w, g, &dV->data[static_cast<std::size_t>(o + ki) * D + h * dh], dh);
          }
          for (int ki = 0; ki < n; ++ki) {
            const T w = W(static_cast<int>(base2 + qi * n + ki), h);
            da[ki] = w * (dw[ki] - sum);
            if (gb) (*dB)(static_cast<int>(base2 + qi * n + ki), h) += da[ki];
            if (gq)
              axpy(scale * da[ki], &Kv.data[static_cast<std::size_t>(o + ki) * D + h * dh],
                   &dQ->data[static_cast<std::size_t>(o + qi) * D + h * dh], dh);
            if (gk)
              axpy(scale * da[ki], &Qv.data[static_cast<std::size_t>(o + qi) * D + h * dh],
                   &dK->data[static_cast<std::size_t>(o + ki) * D + h * dh], dh);
          }
        }
      base2 += static_cast<std::size_t>(n) * n;
    }
  });
}

template <class T>
Var<T> bce_with_logits(Var<T> logits, std::span<const T> labels, T clip) {
  const Array<T>& Z = logits.value();
  if (Z.size() != labels.size() || Z.size() == 0)
    throw ShapeError("bce_with_logits: " + std::to_string(labels.size()) + " labels for "
                     + std::to_string(Z.size()) + " logits");
  Tape<T>& t = *logits.tape;
  const std::size_t n = Z.size();
  std::vector<T> p(n);
  std::vector<unsigned char> clipped(n, 0);
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    T pi = sigmoid_scalar(Z.data[i]);
    if (pi < clip || pi > T(1) - clip) {
      clipped[i] = 1;
      pi = std::clamp(pi, clip, T(1) - clip);
    }
    t.note_kink(clipped[i] != 0);
    p[i] = pi;
    loss -= labels[i] * std::log(pi) + (T(1) - labels[i]) * std::log(T(1) - pi);
  }
  Array<T> Y(1, 1, loss / static_cast<T>(n));
  std::vector<T> y(labels.begin(), labels.end());
  return t.push("bce", std::move(Y), {logits.id},
                [zi = logits.id, p = std::move(p), y = std::move(y), clipped = std::move(clipped)](Tape<T>& tp, int self) {
    if (!tp.needs_grad(zi)) return;
    const T g = tp.grad(self).data[0] / static_cast<T>(p.size());
    Array<T>& d = tp.grad(zi);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!clipped[i]) d.data[i] += g * (p[i] - y[i]);
  });
}

template <class T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels, T clip) {
  const Array<T>& Z = logits.value();
  if (static_cast<int>(labels.size()) != Z.rows || Z.rows == 0)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for "
                     + std::to_string(Z.rows) + " rows");
  Tape<T>& t = *logits.tape;
  const T log_clip = std::log(clip);
  Array<T> P(Z.rows, Z.cols);
  std::vector<unsigned char> clipped(Z.rows, 0);
  T loss = 0;
  for (int r = 0; r < Z.rows; ++r) {
    if (labels[r] < 0 || labels[r] >= Z.cols) throw ShapeError("cross_entropy: label out of range");
    auto zr = Z.row(r);
    const T m = *std::max_element(zr.begin(), zr.end());
    T s = 0;
    for (int c = 0; c < Z.cols; ++c) s += (P(r, c) = std::exp(zr[c] - m));
    for (int c = 0; c < Z.cols; ++c) P(r, c) /= s;
    T lp = zr[labels[r]] - m - std::log(s);
    if (lp < log_clip) {
      clipped[r] = 1;
      lp = log_clip;
    }
    t.note_kink(clipped[r] != 0);
    loss -= lp;
  }
  Array<T> Y(1, 1, loss / static_cast<T>(Z.rows));
  std::vector<int> y(labels.begin(), labels.end());
  return t.push("cross_entropy", std::move(Y), {logits.id},
                [zi = logits.id, P = std::move(P), y = std::move(y), clipped = std::move(clipped)](Tape<T>& tp, int self) {
    if (!tp.needs_grad(zi)) return;
    const T g = tp.grad(self).data[0] / static_cast<T>(P.rows);
    Array<T>& d = tp.grad(zi);
    for (int r = 0; r < P.rows; ++r) {
      if (clipped[r]) continue;
      for (int c = 0; c < P.cols; ++c) d(r, c) += g * (P(r, c) - (c == y[r] ? T(1) : T(0)));
    }
  });
}

#define PGEN_INSTANTIATE_OPS(T)                                                              \
  template Var<T> linear<T>(Var<T>, Var<T>);                                                 \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                         \
  template Var<T> vec_linear<T>(Var<T>, Var<T>);                                             \
  template Var<T> vec_norm<T>(Var<T>);                                                       \
  template Var<T> gate<T>(Var<T>, Var<T>);                                                   \
  template Var<T> add<T>(Var<T>, Var<T>);                                                    \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                    \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                    \
  template Var<T> scale<T>(Var<T>, T);                                                       \
  template Var<T> sigmoid<T>(Var<T>);                                                        \
  template Var<T> leaky_relu<T>(Var<T>, T);                                                  \
  template Var<T> exp<T>(Var<T>);                                                            \
  template Var<T> log<T>(Var<T>);                                                            \
  template Var<T> softmax_rows<T>(Var<T>);                                                   \
  template Var<T> log_softmax_rows<T>(Var<T>);                                               \
  template Var<T> logsumexp_rows<T>(Var<T>);                                                 \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                                   \
  template Var<T> concat_rows<T>(std::span<const Var<T>>);                                   \
  template Var<T> slice_cols<T>(Var<T>, int, int);                                           \
  template Var<T> gather_rows<T>(Var<T>, std::span<const int>);                              \
  template Var<T> scatter_add_rows<T>(Var<T>, std::span<const int>, int);                    \
  template Var<T> sum_all<T>(Var<T>);                                                        \
  template Var<T> mean_all<T>(Var<T>);                                                       \
  template Var<T> frobenius_rows<T>(Var<T>, Var<T>);                                         \
  template Var<T> diag_gaussian_log_density<T>(Var<T>, Var<T>, Var<T>);                      \
  template Var<T> vec_leaky_relu<T>(Var<T>, Var<T>, T);                                      \
  template Var<T> segment_attention<T>(Var<T>, Var<T>, Var<T>, Var<T>, std::span<const int>, \
                                       int, T, Array<T>*);                                   \
  template Var<T> bce_with_logits<T>(Var<T>, std::span<const T>, T);                         \
  template Var<T> cross_entropy<T>(Var<T>, std::span<const int>, T);

PGEN_INSTANTIATE_OPS(float)
PGEN_INSTANTIATE_OPS(double)

}  // namespace pgen::ad
