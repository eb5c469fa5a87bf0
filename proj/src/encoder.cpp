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

#include "pgen/encoder.hpp"

#include <stdexcept>

#include "pgen/ops.hpp"

namespace pgen {

void EncoderConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("encoder needs at least one message passing layer");
  if (node_scalar < 1 || node_vector < 1 || edge_scalar < 1 || edge_vector < 1)
    throw std::invalid_argument("encoder widths must be at least 1");
  if (knn < 1) throw std::invalid_argument("encoder knn must be at least 1");
}

template <class T>
MessageModule<T>::MessageModule(ParamStore<T>& store, const std::string& prefix,
                                const MessageWidths& w, double slope, Rng& rng)
    : node_lin(store, prefix + ".node_lin",
               GvpConfig{w.node_scalar, w.node_vector, w.out_scalar, w.out_vector, 0, slope},
               GvpKind::Linear, rng),
      edge_per(store, prefix + ".edge_per",
               GvpConfig{w.edge_scalar, w.edge_vector, w.edge_scalar, w.edge_vector, 0, slope},
               GvpKind::Perceptron, rng),
      out_per(store, prefix + ".out_per",
              GvpConfig{w.out_scalar, w.out_vector, w.out_scalar, w.out_vector, 0, slope},
              GvpKind::Perceptron, rng),
      edge_to_scalar(store, prefix + ".edge_to_scalar", w.edge_scalar, w.out_scalar, rng),
      edge_to_vector(store, prefix + ".edge_to_vector", w.edge_scalar, w.out_vector, rng),
      node_to_vector(store, prefix + ".node_to_vector", w.out_scalar, w.out_vector, rng),
      edge_vectors(store, prefix + ".edge_vectors", w.edge_vector, w.out_vector, rng),
      widths_(w) { }

template <class T>
Sv<T> MessageModule<T>::operator()(const Ctx<T>& ctx, const Sv<T>& nodes, const Sv<T>& edges,
                                   std::span<const int> sender) const {
  if (static_cast<int>(sender.size()) != edges.rows())
    throw ShapeError("message: " + std::to_string(sender.size()) + " senders for "
                     + std::to_string(edges.rows()) + " edges");
  // Node-side terms depend only on the sender, so they are computed per node.
  Sv<T> vn = node_lin(ctx, nodes);
  auto vn_gate = node_to_vector(ctx, vn.s);
  auto vs = ad::gather_rows(vn.s, sender);
  auto vv = ad::gather_rows(vn.v, sender);
  auto vg = ad::gather_rows(vn_gate, sender);

  Sv<T> e = edge_per(ctx, edges);
  auto ms = ad::mul(vs, edge_to_scalar(ctx, e.s));
  auto mv = ad::add(ad::gate(edge_to_vector(ctx, e.s), vv), ad::gate(vg, edge_vectors(ctx, e.v)));
  return out_per(ctx, Sv<T>{ms, mv});
}

template <class T>
Encoder<T>::Encoder(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& cfg,
                    Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  node_embed_ = GvpBlock<T>(store, prefix + ".node_embed",
                            GvpConfig{kNodeScalarFeatures, 1, cfg.node_scalar, cfg.node_vector, 0, cfg.slope},
                            GvpKind::Linear, rng);
  edge_embed_ = GvpBlock<T>(store, prefix + ".edge_embed",
                            GvpConfig{kEdgeScalarFeatures, 1, cfg.edge_scalar, cfg.edge_vector, 0, cfg.slope},
                            GvpKind::Linear, rng);
  const MessageWidths w{cfg.node_scalar, cfg.node_vector, cfg.edge_scalar,
                        cfg.edge_vector, cfg.node_scalar, cfg.node_vector};
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    messages_.emplace_back(store, p + ".message", w, cfg.slope, rng);
    updates_.emplace_back(store, p + ".update",
                          GvpConfig{cfg.node_scalar, cfg.node_vector, cfg.node_scalar, cfg.node_vector, 0, cfg.slope},
                          GvpKind::Linear, rng);
  }
}

template <class T>
Sv<T> Encoder<T>::aggregate_and_update(const Ctx<T>& ctx, int layer, const Sv<T>& node,
                                       const Sv<T>& messages,
                                       std::span<const int> destination) const {
  const int n = node.rows();
  std::vector<int> count(n, 0);
  for (int d : destination) count.at(d) += 1;
  for (int c : count)
    if (c == 0) throw std::invalid_argument("aggregate_and_update: node without neighbours");
  auto ms = ad::scatter_add_rows(messages.s, destination, n);
  auto mv = ad::scatter_add_rows(messages.v, destination, n);
  Sv<T> u = updates_.at(layer)(ctx, node);
  return {ad::add(u.s, ms), ad::add(u.v, mv)};
}

template <class T>
EncoderOutput<T> Encoder<T>::operator()(const Ctx<T>& ctx, const ContextGraph& graph,
                                        const NodeFeatures& nodes, const EdgeFeatures& edges) const {
  EncoderOutput<T> out;
  Sv<T> h = node_embed_(ctx, feature_constant(ctx.tape, nodes.scalars, nodes.vectors));
  out.edges = edge_embed_(ctx, feature_constant(ctx.tape, edges.scalars, edges.vectors));
  out.layers.push_back(h);
  for (int l = 0; l < cfg_.layers; ++l) {
    Sv<T> m = messages_[l](ctx, h, out.edges, graph.edge_src);
    h = aggregate_and_update(ctx, l, h, m, graph.edge_dst);
    out.layers.push_back(h);
  }
  out.nodes = h;
  return out;
}

template class MessageModule<float>;
template class MessageModule<double>;
template class Encoder<float>;
template class Encoder<double>;

}  // namespace pgen
