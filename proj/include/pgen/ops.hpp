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

#pragma once

// Differentiable primitives. Every function records one tape node.

#include <initializer_list>
#include <span>

#include "pgen/diffcore.hpp"

namespace pgen::ad {

// x (N, in) times W (out, in) transposed, plus optional bias b (1, out).
template <class T> Var<T> linear(Var<T> x, Var<T> w);
template <class T> Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

// Channel mixing of vector blocks: x (N, in*3), W (out, in) -> (N, out*3).
template <class T> Var<T> vec_linear(Var<T> x, Var<T> w);

// Row-wise norm of each 3-vector channel: (N, C*3) -> (N, C).
template <class T> Var<T> vec_norm(Var<T> x);

// Scales each vector channel by a scalar: g (N, C), v (N, C*3).
template <class T> Var<T> gate(Var<T> g, Var<T> v);

template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);  // Hadamard
template <class T> Var<T> scale(Var<T> a, T c);

template <class T> Var<T> sigmoid(Var<T> x);
template <class T> Var<T> leaky_relu(Var<T> x, T slope);
template <class T> Var<T> exp(Var<T> x);
template <class T> Var<T> log(Var<T> x);

template <class T> Var<T> softmax_rows(Var<T> x);
template <class T> Var<T> log_softmax_rows(Var<T> x);
template <class T> Var<T> logsumexp_rows(Var<T> x);  // (N, C) -> (N, 1)

template <class T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <class T> Var<T> concat_cols(std::initializer_list<Var<T>> parts) {
  return concat_cols<T>(std::span<const Var<T>>(parts.begin(), parts.size()));
}
template <class T> Var<T> concat_rows(std::span<const Var<T>> parts);
template <class T> Var<T> slice_cols(Var<T> x, int begin, int end);

template <class T> Var<T> gather_rows(Var<T> x, std::span<const int> index);
template <class T> Var<T> scatter_add_rows(Var<T> x, std::span<const int> index, int rows);

template <class T> Var<T> sum_all(Var<T> x);   // -> (1, 1)
template <class T> Var<T> mean_all(Var<T> x);  // -> (1, 1)

// Row-wise Frobenius inner product of two equally shaped blocks: -> (N, 1).
template <class T> Var<T> frobenius_rows(Var<T> a, Var<T> b);

// log N(x; mu_k, diag exp(s_k)) per component: x (N, 3), mu and log-variances s
// (N, K*3) -> (N, K). Taking s directly keeps the gradient free of 1/var^2.
template <class T> Var<T> diag_gaussian_log_density(Var<T> x, Var<T> mu, Var<T> log_var);

// Vector leaky-ReLU against per-channel learned directions (N, C*3).
// Channels whose direction has (near) zero norm pass through unchanged and
// are counted in Tape::degenerate_directions.
template <class T> Var<T> vec_leaky_relu(Var<T> v, Var<T> direction, T slope);

// Multi-head attention inside contiguous row segments.
//   q, k, v: (R, D), heads split D into equal contiguous column groups.
//   bias: (sum_s n_s^2, heads), row (q * n_s + k) of segment s.
//   offsets: segment starts, size S + 1, offsets.back() == R.
// logits = scale * <q_q, k_k>_head + bias, softmax over k within the segment.
// When weights_out is given it receives the attention weights in bias layout.
template <class T>
Var<T> segment_attention(Var<T> q, Var<T> k, Var<T> v, Var<T> bias,
                         std::span<const int> offsets, int heads, T scale,
                         Array<T>* weights_out = nullptr);

// Mean binary cross entropy of sigmoid(logits) against labels in {0, 1};
// probabilities are clipped to [clip, 1 - clip].
template <class T>
Var<T> bce_with_logits(Var<T> logits, std::span<const T> labels, T clip);

// Mean cross entropy of softmax(logits) rows against class labels;
// the target probability is clipped below at clip.
template <class T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels, T clip);

}  // namespace pgen::ad
