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

#include <span>
#include <string>
#include <vector>

#include "pgen/geomlayers.hpp"
#include "pgen/molgraph.hpp"

namespace pgen {

struct EncoderConfig {
  int layers = 6;
  int node_scalar = 256;
  int node_vector = 64;
  int edge_scalar = 64;
  int edge_vector = 64;
  int knn = 48;
  double slope = 0.2;

  void validate() const;
};

struct MessageWidths {
  int node_scalar, node_vector;
  int edge_scalar, edge_vector;
  int out_scalar, out_vector;
};

/// Edge message: node features of the sender j combined with the features of
/// edge ij through G_lin / G_per blocks and scalar-vector cross gating.
template <class T>
class MessageModule {
 public:
  MessageModule() = default;
  MessageModule(ParamStore<T>& store, const std::string& prefix, const MessageWidths& w,
                double slope, Rng& rng);

  /// One message per edge. `nodes` holds per-node sender features and
  /// `sender[e]` picks the row used for edge e.
  Sv<T> operator()(const Ctx<T>& ctx, const Sv<T>& nodes, const Sv<T>& edges,
                   std::span<const int> sender) const;

  const MessageWidths& widths() const { return widths_; }

  GvpBlock<T> node_lin;   // G_lin on the sender
  GvpBlock<T> edge_per;   // G_per on the edge
  GvpBlock<T> out_per;    // G'_per on the combined message
  Dense<T> edge_to_scalar;   // scalar gate of the node scalars
  Dense<T> edge_to_vector;   // scalar gate of the node vectors
  Dense<T> node_to_vector;   // scalar gate of the edge vectors
  VecDense<T> edge_vectors;  // channel map of the edge vectors

 private:
  MessageWidths widths_{};
};

template <class T>
struct EncoderOutput {
  Sv<T> nodes;              // final layer
  std::vector<Sv<T>> layers;  // embedding (index 0) and every layer after it
  Sv<T> edges;              // embedded edge features, shared by all layers
};

template <class T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& cfg, Rng& rng);

  EncoderOutput<T> operator()(const Ctx<T>& ctx, const ContextGraph& graph,
                              const NodeFeatures& nodes, const EdgeFeatures& edges) const;

  /// Sums the messages into their destination rows, then adds G'_lin(node).
  Sv<T> aggregate_and_update(const Ctx<T>& ctx, int layer, const Sv<T>& node,
                             const Sv<T>& messages, std::span<const int> destination) const;

  const EncoderConfig& config() const { return cfg_; }
  const MessageModule<T>& message(int layer) const { return messages_.at(layer); }
  const GvpBlock<T>& update(int layer) const { return updates_.at(layer); }

 private:
  EncoderConfig cfg_;
  GvpBlock<T> node_embed_;
  GvpBlock<T> edge_embed_;
  std::vector<MessageModule<T>> messages_;
  std::vector<GvpBlock<T>> updates_;
};

/// Lifts an off-tape double feature block onto a tape of precision T.
template <class T>
Sv<T> feature_constant(Tape<T>& tape, const Array<double>& scalars, const Array<double>& vectors) {
  return {tape.constant(cast_array<T>(scalars)), tape.constant(cast_array<T>(vectors))};
}

}  // namespace pgen
