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

#include <string>

#include "pgen/diffcore.hpp"
#include "pgen/random.hpp"

namespace pgen {

/// A batch of paired scalar/vector channel features on a tape.
/// s is (N, scalars); v is (N, vectors * 3).
template <class T>
struct Sv {
  Var<T> s;
  Var<T> v;

  int rows() const { return s.rows(); }
  int scalars() const { return s.cols(); }
  int vectors() const { return v.cols() / 3; }
};

/// Plain-value scalar/vector feature block, the off-tape counterpart of Sv.
template <class T>
struct ScalarVectorFeature {
  Array<T> scalars;  // (N, s)
  Array<T> vectors;  // (N, h * 3)
};

template <class T>
Sv<T> constant_sv(Tape<T>& tape, const ScalarVectorFeature<T>& x) {
  return {tape.constant(x.scalars), tape.constant(x.vectors)};
}

/// Binds a tape to the parameter store the layers read from.
template <class T>
struct Ctx {
  Tape<T>& tape;
  ParamStore<T>& store;

  Var<T> p(ParamId id) const { return tape.param(store, id); }
};

struct GvpConfig {
  int in_scalar = 1;
  int in_vector = 1;
  int out_scalar = 1;
  int out_vector = 1;
  int hidden_vector = 0;  // 0 selects max(in_vector, out_vector)
  double slope = 0.2;

  int hidden() const;
  void validate() const;
};

enum class GvpKind {
  Original,    // leaky-ReLU scalars, sigmoid-gated vectors
  Perceptron,  // Original followed by the vector leaky-ReLU (G_per)
  Linear,      // no scalar activation, gate without the sigmoid (G_lin)
};

template <class T>
class GvpBlock {
 public:
  GvpBlock() = default;
  GvpBlock(ParamStore<T>& store, const std::string& prefix, const GvpConfig& cfg, GvpKind kind,
           Rng& rng);

  Sv<T> operator()(const Ctx<T>& ctx, const Sv<T>& x) const;

  const GvpConfig& config() const { return cfg_; }
  GvpKind kind() const { return kind_; }

  // Weight handles: x1 = W1 x, x2 = W2 x1, s1 = W3 [|x1|; s] + b3,
  // gate = Wg s1 + bg, direction = Wd x' (Perceptron only).
  ParamId w1, w2, w3, b3, wg, bg, wd;

 private:
  GvpConfig cfg_;
  GvpKind kind_ = GvpKind::Linear;
};

/// G_mlp: a G_per block followed by a G_lin block.
template <class T>
class GvMlp {
 public:
  GvMlp() = default;
  GvMlp(ParamStore<T>& store, const std::string& prefix, int in_s, int in_v, int hid_s,
        int hid_v, int out_s, int out_v, double slope, Rng& rng);

  Sv<T> operator()(const Ctx<T>& ctx, const Sv<T>& x) const { return lin_(ctx, per_(ctx, x)); }

  const GvpBlock<T>& perceptron() const { return per_; }
  const GvpBlock<T>& linear() const { return lin_; }

 private:
  GvpBlock<T> per_;
  GvpBlock<T> lin_;
};

/// Scalar dense layer with bias.
template <class T>
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore<T>& store, const std::string& prefix, int in, int out, Rng& rng,
        bool bias = true);
  Var<T> operator()(const Ctx<T>& ctx, Var<T> x) const;

  ParamId w, b;
};

/// Channel-mixing vector layer without bias.
template <class T>
class VecDense {
 public:
  VecDense() = default;
  VecDense(ParamStore<T>& store, const std::string& prefix, int in, int out, Rng& rng);
  Var<T> operator()(const Ctx<T>& ctx, Var<T> x) const;

  ParamId w;
};

/// Vector leaky-ReLU with a learned direction map.
template <class T>
Var<T> vector_leaky_relu(const Ctx<T>& ctx, Var<T> v, ParamId direction_map, T slope);

/// Fills a weight matrix with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class T>
void init_uniform(Array<T>& w, Rng& rng);

}  // namespace pgen
