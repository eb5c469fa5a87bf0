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

#include "pgen/geomlayers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pgen/ops.hpp"

namespace pgen {

int GvpConfig::hidden() const {
  return hidden_vector > 0 ? hidden_vector : std::max(in_vector, out_vector);
}

void GvpConfig::validate() const {
  if (in_scalar < 1 || in_vector < 1 || out_scalar < 1 || out_vector < 1 || hidden() < 1)
    throw std::invalid_argument("GVP channel counts must all be at least 1");
  if (!(slope > 0 && slope < 1)) throw std::invalid_argument("leaky-ReLU slope must lie in (0, 1)");
}

template <class T>
void init_uniform(Array<T>& w, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
  for (T& x : w.data) x = static_cast<T>(uniform(rng, -bound, bound));
}

template <class T>
GvpBlock<T>::GvpBlock(ParamStore<T>& store, const std::string& prefix, const GvpConfig& cfg,
                      GvpKind kind, Rng& rng)
    : cfg_(cfg), kind_(kind) {
  cfg.validate();
  const int h1 = cfg.hidden();
  w1 = store.add(prefix + ".w1", h1, cfg.in_vector);
  w2 = store.add(prefix + ".w2", cfg.out_vector, h1);
  w3 = store.add(prefix + ".w3", cfg.out_scalar, h1 + cfg.in_scalar);
  b3 = store.add(prefix + ".b3", 1, cfg.out_scalar);
  wg = store.add(prefix + ".wg", cfg.out_vector, cfg.out_scalar);
  bg = store.add(prefix + ".bg", 1, cfg.out_vector);
  for (ParamId id : {w1, w2, w3, wg}) init_uniform(store.entry(id).value, rng);
  if (kind == GvpKind::Perceptron) {
    wd = store.add(prefix + ".wd", cfg.out_vector, cfg.out_vector);
    init_uniform(store.entry(wd).value, rng);
  }
}

template <class T>
Sv<T> GvpBlock<T>::operator()(const Ctx<T>& ctx, const Sv<T>& x) const {
  if (x.scalars() != cfg_.in_scalar)
    throw ShapeError("GVP scalar channel axis: got " + std::to_string(x.scalars()) + ", expected "
                     + std::to_string(cfg_.in_scalar));
  if (x.v.cols() != cfg_.in_vector * 3)
    throw ShapeError("GVP vector channel axis: got " + std::to_string(x.v.cols() / 3)
                     + ", expected " + std::to_string(cfg_.in_vector));
  if (x.s.rows() != x.v.rows()) throw ShapeError("GVP row axis: scalar and vector rows differ");
  const T slope = static_cast<T>(cfg_.slope);
  auto x1 = ad::vec_linear(x.v, ctx.p(w1));
  auto x2 = ad::vec_linear(x1, ctx.p(w2));
  auto sn = ad::vec_norm(x1);
  auto s1 = ad::linear(ad::concat_cols<T>({sn, x.s}), ctx.p(w3), ctx.p(b3));
  auto g = ad::linear(s1, ctx.p(wg), ctx.p(bg));
  if (kind_ == GvpKind::Linear) return {s1, ad::gate(g, x2)};
  auto s_out = ad::leaky_relu(s1, slope);
  auto v_out = ad::gate(ad::sigmoid(g), x2);
  if (kind_ == GvpKind::Perceptron) v_out = vector_leaky_relu(ctx, v_out, wd, slope);
  return {s_out, v_out};
}

template <class T>
GvMlp<T>::GvMlp(ParamStore<T>& store, const std::string& prefix, int in_s, int in_v, int hid_s,
                int hid_v, int out_s, int out_v, double slope, Rng& rng)
    : per_(store, prefix + ".per", GvpConfig{in_s, in_v, hid_s, hid_v, 0, slope},
           GvpKind::Perceptron, rng),
      lin_(store, prefix + ".lin", GvpConfig{hid_s, hid_v, out_s, out_v, 0, slope},
           GvpKind::Linear, rng) { }

template <class T>
Dense<T>::Dense(ParamStore<T>& store, const std::string& prefix, int in, int out, Rng& rng,
                bool bias) {
  w = store.add(prefix + ".w", out, in);
  init_uniform(store.entry(w).value, rng);
  if (bias) b = store.add(prefix + ".b", 1, out);
}

template <class T>
Var<T> Dense<T>::operator()(const Ctx<T>& ctx, Var<T> x) const {
  if (b.valid()) return ad::linear(x, ctx.p(w), ctx.p(b));
  return ad::linear(x, ctx.p(w));
}

template <class T>
VecDense<T>::VecDense(ParamStore<T>& store, const std::string& prefix, int in, int out, Rng& rng) {
  w = store.add(prefix + ".w", out, in);
  init_uniform(store.entry(w).value, rng);
}

template <class T>
Var<T> VecDense<T>::operator()(const Ctx<T>& ctx, Var<T> x) const {
  return ad::vec_linear(x, ctx.p(w));
}

template <class T>
Var<T> vector_leaky_relu(const Ctx<T>& ctx, Var<T> v, ParamId direction_map, T slope) {
  const auto& map = ctx.store.entry(direction_map).value;
  if (map.rows != v.cols() / 3)
    throw ShapeError("vector nonlinearity: direction map yields " + std::to_string(map.rows)
                     + " channels for " + std::to_string(v.cols() / 3) + " inputs");
  auto dir = ad::vec_linear(v, ctx.p(direction_map));
  return ad::vec_leaky_relu(v, dir, slope);
}

template class GvpBlock<float>;
template class GvpBlock<double>;
template class GvMlp<float>;
template class GvMlp<double>;
template class Dense<float>;
template class Dense<double>;
template class VecDense<float>;
template class VecDense<double>;
template void init_uniform<float>(Array<float>&, Rng&);
template void init_uniform<double>(Array<double>&, Rng&);
template Var<float> vector_leaky_relu<float>(const Ctx<float>&, Var<float>, ParamId, float);
template Var<double> vector_leaky_relu<double>(const Ctx<double>&, Var<double>, ParamId, double);

}  // namespace pgen
