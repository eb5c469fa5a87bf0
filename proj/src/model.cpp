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

#include "pgen/model.hpp"

#include <stdexcept>

namespace pgen {

void ModelConfig::validate() const {
  encoder.validate();
  heads.validate();
}

template <class T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), store_(std::make_unique<ParamStore<T>>()) {
  cfg.validate();
  Rng rng(init_seed);
  const double slope = cfg.encoder.slope;
  encoder_ = Encoder<T>(*store_, "encoder", cfg.encoder, rng);
  frontier_ = FrontierHead<T>(*store_, "frontier", cfg.encoder, cfg.heads, slope, rng);
  position_ = PositionHead<T>(*store_, "position", cfg.encoder, cfg.heads, slope, rng);
  field_ = ElementBondHead<T>(*store_, "field", cfg.encoder, cfg.heads, slope, rng);
}

template <class T>
EncoderOutput<T> Model<T>::encode(const Ctx<T>& ctx, const ContextGraph& graph) const {
  return encoder_(ctx, graph, featurize_nodes(graph), featurize_edges(graph));
}

template <class T>
template <class U>
void Model<T>::assign_from(const ParamStore<U>& other) {
  if (other.size() != store_->size())
    throw std::invalid_argument("parameter count mismatch: " + std::to_string(other.size())
                                + " entries for a model with " + std::to_string(store_->size()));
  for (auto& e : store_->entries()) {
    const ParamId id = other.find(e.name);
    if (!id.valid()) throw std::invalid_argument("missing parameter '" + e.name + "'");
    const auto& src = other.entry(id);
    if (src.value.rows != e.value.rows || src.value.cols != e.value.cols)
      throw std::invalid_argument("parameter '" + e.name + "' has shape ("
                                  + std::to_string(src.value.rows) + ", "
                                  + std::to_string(src.value.cols) + "), expected ("
                                  + std::to_string(e.value.rows) + ", "
                                  + std::to_string(e.value.cols) + ")");
    e.value = cast_array<T>(src.value);
    e.m = cast_array<T>(src.m);
    e.v = cast_array<T>(src.v);
  }
  store_->step = other.step;
}

template class Model<float>;
template class Model<double>;
template void Model<float>::assign_from(const ParamStore<float>&);
template void Model<float>::assign_from(const ParamStore<double>&);
template void Model<double>::assign_from(const ParamStore<float>&);
template void Model<double>::assign_from(const ParamStore<double>&);

}  // namespace pgen
