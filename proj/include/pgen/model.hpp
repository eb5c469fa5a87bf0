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

#include <cstdint>
#include <memory>

#include "pgen/encoder.hpp"
#include "pgen/predictors.hpp"

namespace pgen {

struct ModelConfig {
  EncoderConfig encoder;
  PredictorConfig heads;

  void validate() const;
};

/// Encoder plus the three heads, all reading one parameter store.
template <class T>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& store() { return *store_; }
  const ParamStore<T>& store() const { return *store_; }

  const Encoder<T>& encoder() const { return encoder_; }
  const FrontierHead<T>& frontier() const { return frontier_; }
  const PositionHead<T>& position() const { return position_; }
  const ElementBondHead<T>& field() const { return field_; }

  Ctx<T> context(Tape<T>& tape) const { return {tape, *store_}; }

  /// Featurizes and encodes a context graph.
  EncoderOutput<T> encode(const Ctx<T>& ctx, const ContextGraph& graph) const;

  /// Copies every value by name; names and shapes must match exactly.
  template <class U>
  void assign_from(const ParamStore<U>& other);

 private:
  ModelConfig cfg_;
  std::unique_ptr<ParamStore<T>> store_;
  Encoder<T> encoder_;
  FrontierHead<T> frontier_;
  PositionHead<T> position_;
  ElementBondHead<T> field_;
};

}  // namespace pgen
