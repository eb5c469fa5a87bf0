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

// Reverse-mode differentiation over dense 2-D arrays.
//
// Scalar channel blocks are (rows, channels) arrays. Vector channel blocks
// are (rows, channels * 3) arrays laid out as [channel][xyz], so a
// channel-mixing map never touches the spatial axis.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pgen {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a primitive produces a NaN or infinity.
class NumericFault : public std::runtime_error {
 public:
  NumericFault(std::string op, std::size_t position);

  const std::string& op() const { return op_; }
  std::size_t position() const { return position_; }

 private:
  std::string op_;
  std::size_t position_;
};

template <class T>
struct Array {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Array() = default;
  Array(int r, int c, T fill = T(0))
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) { }

  std::size_t size() const { return data.size(); }
  T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  T operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::span<T> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const T> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  bool same_shape(const Array& o) const { return rows == o.rows && cols == o.cols; }
};

template <class To, class From>
Array<To> cast_array(const Array<From>& a) {
  Array<To> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = static_cast<To>(a.data[i]);
  return out;
}

struct ParamId {
  int index = -1;
  bool valid() const { return index >= 0; }
};

/// Named weight arrays with gradient accumulators and Adam moment state.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Array<T> value;
    Array<T> grad;
    Array<T> m;
    Array<T> v;
  };

  ParamId add(std::string name, int rows, int cols);
  ParamId find(std::string_view name) const;  // invalid id when absent

  std::size_t size() const { return entries_.size(); }
  Entry& entry(ParamId id) { return entries_.at(id.index); }
  const Entry& entry(ParamId id) const { return entries_.at(id.index); }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  std::size_t parameter_count() const;

  long step = 0;  // Adam step counter

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Global L2 norm of the accumulated gradients, rescaled to at most
/// max_norm when max_norm > 0. Faults on a non-finite gradient.
template <class T>
double clip_grad_norm(ParamStore<T>& store, double max_norm);

/// One Adam update from the accumulated gradients, which are zeroed afterwards.
template <class T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg);

template <class T>
class Tape;

/// Handle to a value recorded on a tape.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Array<T>& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  bool valid() const { return tape != nullptr && id >= 0; }
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  explicit Tape(bool record = true) : record_(record) { }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Array<T> value);
  Var<T> param(ParamStore<T>& store, ParamId id);

  /// Accumulates d(root)/d(param) * seed into the store gradients.
  void backward(Var<T> root, T seed = T(1));

  const Array<T>& value(int id) const { return nodes_[id].value; }
  const char* op_name(int id) const { return nodes_[id].op; }

  // Primitive-author interface.
  Var<T> push(const char* op, Array<T> value, std::initializer_list<int> inputs, BackwardFn fn);
  Var<T> push(const char* op, Array<T> value, std::span<const int> inputs, BackwardFn fn);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  Array<T>& grad(int id);

  /// Hash of the branch decisions taken by non-smooth primitives.
  std::uint64_t kink_signature() const { return kinks_; }
  void note_kink(bool branch) {
    kinks_ = (kinks_ ^ (branch ? 0x9e3779b97f4a7c15ULL : 0x7f4a7c159e3779b9ULL)) * 0x100000001b3ULL;
  }
  /// Count of vector-nonlinearity channels that fell back to identity.
  std::size_t degenerate_directions = 0;

 private:
  struct Node {
    const char* op = "";
    Array<T> value;
    Array<T> grad;
    BackwardFn backward;
    ParamStore<T>* store = nullptr;
    ParamId param;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_;
  bool consumed_ = false;
  std::uint64_t kinks_ = 0xcbf29ce484222325ULL;
};

template <class T>
const Array<T>& Var<T>::value() const {
  return tape->value(id);
}

}  // namespace pgen
