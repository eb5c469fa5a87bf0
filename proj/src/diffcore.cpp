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

#include "pgen/diffcore.hpp"

#include <cmath>

namespace pgen {

NumericFault::NumericFault(std::string op, std::size_t position)
    : std::runtime_error("non-finite value produced by '" + op + "' at tape position "
                         + std::to_string(position)),
      op_(std::move(op)), position_(position) { }

template <class T>
ParamId ParamStore<T>::add(std::string name, int rows, int cols) {
  if (rows < 1 || cols < 1)
    throw ShapeError("parameter '" + name + "' has an empty shape");
  if (index_.count(name) != 0)
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  int id = static_cast<int>(entries_.size());
  index_.emplace(name, id);
  Entry e;
  e.name = std::move(name);
  e.value = Array<T>(rows, cols);
  e.grad = Array<T>(rows, cols);
  e.m = Array<T>(rows, cols);
  e.v = Array<T>(rows, cols);
  entries_.push_back(std::move(e));
  return {id};
}

template <class T>
ParamId ParamStore<T>::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return {};
  return {it->second};
}

template <class T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), T(0));
}

template <class T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <class T>
double clip_grad_norm(ParamStore<T>& store, double max_norm) {
  double sq = 0;
  for (const auto& e : store.entries())
    for (T g : e.grad.data) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) {
    for (const auto& e : store.entries())
      for (std::size_t i = 0; i < e.grad.size(); ++i)
        if (!std::isfinite(e.grad.data[i])) throw NumericFault("gradient(" + e.name + ")", i);
    throw NumericFault("gradient norm", 0);
  }
  if (max_norm > 0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& e : store.entries())
      for (T& g : e.grad.data) g *= scale;
  }
  return norm;
}

template <class T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
  if (!(cfg.lr > 0)) throw std::invalid_argument("Adam learning rate must be positive");
  store.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(store.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(store.step));
  for (auto& e : store.entries()) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad.data[i];
      const double m = cfg.beta1 * e.m.data[i] + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * e.v.data[i] + (1.0 - cfg.beta2) * g * g;
      e.m.data[i] = static_cast<T>(m);
      e.v.data[i] = static_cast<T>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      const T next = static_cast<T>(e.value.data[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
      if (!std::isfinite(next))
        throw NumericFault("adam_step(" + e.name + ")", static_cast<std::size_t>(store.step));
      e.value.data[i] = next;
      e.grad.data[i] = T(0);
    }
  }
}

template <class T>
Var<T> Tape<T>::constant(Array<T> value) {
  return push("constant", std::move(value), {}, nullptr);
}

template <class T>
Var<T> Tape<T>::param(ParamStore<T>& store, ParamId id) {
  Var<T> v = push("param", store.entry(id).value, {}, nullptr);
  Node& n = nodes_[v.id];
  n.store = &store;
  n.param = id;
  n.needs_grad = record_;
  return v;
}

template <class T>
Var<T> Tape<T>::push(const char* op, Array<T> value, std::initializer_list<int> inputs,
                     BackwardFn fn) {
  return push(op, std::move(value), std::span<const int>(inputs.begin(), inputs.size()),
              std::move(fn));
}

template <class T>
Var<T> Tape<T>::push(const char* op, Array<T> value, std::span<const int> inputs,
                     BackwardFn fn) {
  for (const T x : value.data)
    if (!std::isfinite(x)) throw NumericFault(op, nodes_.size());
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (record_) {
    for (int in : inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
    if (n.needs_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <class T>
Array<T>& Tape<T>::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Array<T>(n.value.rows, n.value.cols);
  return n.grad;
}

template <class T>
void Tape<T>::backward(Var<T> root, T seed) {
  if (!record_) throw std::logic_error("backward on a tape recorded without gradients");
  if (consumed_) throw std::logic_error("tape already consumed by a previous backward pass");
  if (root.tape != this) throw std::invalid_argument("root belongs to another tape");
  if (root.value().size() != 1) throw ShapeError("backward root must be a single scalar");
  consumed_ = true;
  grad(root.id).data[0] += seed;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, i);
    } else if (n.store != nullptr) {
      auto& g = n.store->entry(n.param).grad;
      for (std::size_t k = 0; k < g.size(); ++k) g.data[k] += n.grad.data[k];
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Tape<float>;
template class Tape<double>;
template double clip_grad_norm<float>(ParamStore<float>&, double);
template double clip_grad_norm<double>(ParamStore<double>&, double);
template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);

}  // namespace pgen
