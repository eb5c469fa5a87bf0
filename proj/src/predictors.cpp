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

#include "pgen/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pgen/ops.hpp"

namespace pgen {

void PredictorConfig::validate() const {
  if (frontier_scalar < 1 || frontier_vector < 1 || position_scalar < 1 || position_vector < 1)
    throw std::invalid_argument("predictor widths must be at least 1");
  if (components < 1) throw std::invalid_argument("mixture needs at least one component");
  if (field_scalar < 1 || field_vector < 1 || field_edge_scalar < 1 || field_edge_vector < 1)
    throw std::invalid_argument("element-and-bond widths must be at least 1");
  if (field_knn < 1) throw std::invalid_argument("element-and-bond knn must be at least 1");
  if (heads < 1 || field_scalar % heads != 0 || field_vector % heads != 0)
    throw std::invalid_argument("attention heads must divide the element-and-bond widths ("
                                + std::to_string(field_scalar) + ", "
                                + std::to_string(field_vector) + ") by "
                                + std::to_string(heads));
}

void GmmParams::validate() const {
  const std::size_t k = weights.size();
  if (k == 0 || means.size() != k || variances.size() != k)
    throw std::invalid_argument("mixture needs matching weights, means and variances");
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("mixture weight is not a probability");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("mixture weights sum to " + std::to_string(total));
  for (const Vec3& v : variances)
    for (double x : v)
      if (!(x > 0) || !std::isfinite(x)) throw std::invalid_argument("mixture variance must be positive");
}

double gmm_log_pdf(const GmmParams& gmm, const Vec3& x) {
  gmm.validate();
  constexpr double log2pi = 1.8378770664093454836;
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(gmm.weights.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double t = std::log(gmm.weights[k]);
    for (int a = 0; a < 3; ++a) {
      const double d = x[a] - gmm.means[k][a];
      t -= 0.5 * (log2pi + std::log(gmm.variances[k][a]) + d * d / gmm.variances[k][a]);
    }
    terms[k] = t;
    m = std::max(m, t);
  }
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

Vec3 gmm_sample(const GmmParams& gmm, Rng& rng, int* component) {
  gmm.validate();
  const int k = sample_weighted(std::span<const double>(gmm.weights), rng);
  if (k < 0) throw std::invalid_argument("mixture has no component with positive weight");
  if (component != nullptr) *component = k;
  Vec3 out;
  for (int a = 0; a < 3; ++a)
    out[a] = gmm.means[k][a] + std::sqrt(gmm.variances[k][a]) * standard_normal(rng);
  return out;
}

template <class T>
GmmParams GmmVars<T>::row(int r) const {
  const Array<T>& L = logits.value();
  const Array<T>& M = means.value();
  const Array<T>& V = log_variances.value();
  const int K = L.cols;
  GmmParams g;
  g.weights.resize(K);
  g.means.resize(K);
  g.variances.resize(K);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(L(r, k)));
  double z = 0;
  for (int k = 0; k < K; ++k) z += g.weights[k] = std::exp(static_cast<double>(L(r, k)) - mx);
  for (int k = 0; k < K; ++k) {
    g.weights[k] /= z;
    for (int a = 0; a < 3; ++a) {
      g.means[k][a] = M(r, 3 * k + a);
      g.variances[k][a] = std::exp(static_cast<double>(V(r, 3 * k + a)));
    }
  }
  return g;
}

template <class T>
Var<T> gmm_log_pdf(const GmmVars<T>& gmm, Var<T> x) {
  auto comp = ad::diag_gaussian_log_density(x, gmm.means, gmm.log_variances);
  return ad::logsumexp_rows(ad::add(comp, ad::log_softmax_rows(gmm.logits)));
}

template <class T>
FrontierHead<T>::FrontierHead(ParamStore<T>& store, const std::string& prefix,
                              const EncoderConfig& enc, const PredictorConfig& cfg, double slope,
                              Rng& rng)
    : mlp_(store, prefix + ".mlp", enc.node_scalar, enc.node_vector, cfg.frontier_scalar,
           cfg.frontier_vector, 1, 1, slope, rng) { }

template <class T>
Var<T> FrontierHead<T>::operator()(const Ctx<T>& ctx, const Sv<T>& nodes) const {
  return mlp_(ctx, nodes).s;
}

template <class T>
PositionHead<T>::PositionHead(ParamStore<T>& store, const std::string& prefix,
                              const EncoderConfig& enc, const PredictorConfig& cfg, double slope,
                              Rng& rng) {
  const int ps = cfg.position_scalar, pv = cfg.position_vector, K = cfg.components;
  mlp_ = GvMlp<T>(store, prefix + ".mlp", enc.node_scalar, enc.node_vector, ps, pv, ps, pv, slope, rng);
  mu_ = GvpBlock<T>(store, prefix + ".mean", GvpConfig{ps, pv, 1, K, 0, slope}, GvpKind::Linear, rng);
  sigma_ = GvpBlock<T>(store, prefix + ".variance", GvpConfig{ps, pv, 1, K, 0, slope},
                       GvpKind::Linear, rng);
  pi_ = GvpBlock<T>(store, prefix + ".weight", GvpConfig{ps, pv, K, 1, 0, slope}, GvpKind::Linear, rng);
}

template <class T>
GmmVars<T> PositionHead<T>::operator()(const Ctx<T>& ctx, const Sv<T>& focal) const {
  Sv<T> h = mlp_(ctx, focal);
  return GmmVars<T>{pi_(ctx, h).s, mu_(ctx, h).v, sigma_(ctx, h).v};
}

template <class T>
ElementBondHead<T>::ElementBondHead(ParamStore<T>& store, const std::string& prefix,
                                    const EncoderConfig& enc, const PredictorConfig& cfg,
                                    double slope, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  const int fs = cfg.field_scalar, fv = cfg.field_vector;
  const int es = cfg.field_edge_scalar, ev = cfg.field_edge_vector;
  edge_embed_ = GvpBlock<T>(store, prefix + ".edge_embed", GvpConfig{kEdgeScalarFeatures, 1, es, ev, 0, slope},
                            GvpKind::Linear, rng);
  message_ = MessageModule<T>(store, prefix + ".message",
                              MessageWidths{enc.node_scalar, enc.node_vector, es, ev, fs, fv}, slope, rng);
  element_mlp_ = GvMlp<T>(store, prefix + ".element", fs, fv, fs, fv, kNumElementClasses, 1, slope, rng);
  pair_edge_mlp_ = GvMlp<T>(store, prefix + ".pair_edge", es, ev, es, ev, es, ev, slope, rng);
  pair_mlp_ = GvMlp<T>(store, prefix + ".pair", fs + enc.node_scalar + es, fv + enc.node_vector + ev,
                       fs, fv, fs, fv, slope, rng);
  const GvpConfig sq{fs, fv, fs, fv, 0, slope};
  query_lin_ = GvpBlock<T>(store, prefix + ".attn_query", sq, GvpKind::Linear, rng);
  key_lin_ = GvpBlock<T>(store, prefix + ".attn_key", sq, GvpKind::Linear, rng);
  value_lin_ = GvpBlock<T>(store, prefix + ".attn_value", sq, GvpKind::Linear, rng);
  attn_out_ = GvpBlock<T>(store, prefix + ".attn_out", sq, GvpKind::Linear, rng);
  bias_ = Dense<T>(store, prefix + ".attn_bias", kPairBiasFeatures, cfg.heads, rng);
  bond_mlp_ = GvMlp<T>(store, prefix + ".bond", fs, fv, fs, fv, kNumBondClasses, 1, slope, rng);
}

namespace {

// Edge features from each query (destination) to the given context nodes
// (senders), embedded on the tape.
template <class T>
Sv<T> query_edges(const Ctx<T>& ctx, const GvpBlock<T>& embed, const ContextGraph& graph,
                  std::span<const int> query, std::span<const Vec3> positions,
                  std::span<const int> node) {
  const int n = static_cast<int>(node.size());
  Array<double> s(n, kEdgeScalarFeatures), v(n, 3);
  for (int e = 0; e < n; ++e)
    edge_feature_row(positions[query[e]], graph.coords.at(node[e]), BondOrder::None, s.row(e),
                     std::span<double>(&v.data[static_cast<std::size_t>(e) * 3], 3));
  return embed(ctx, feature_constant(ctx.tape, s, v));
}

template <class T>
Sv<T> concat_sv(std::initializer_list<Sv<T>> parts) {
  std::vector<Var<T>> s, v;
  for (const Sv<T>& p : parts) {
    s.push_back(p.s);
    v.push_back(p.v);
  }
  return {ad::concat_cols<T>(std::span<const Var<T>>(s)), ad::concat_cols<T>(std::span<const Var<T>>(v))};
}

template <class T>
Sv<T> gather_sv(const Sv<T>& x, std::span<const int> index) {
  return {ad::gather_rows(x.s, index), ad::gather_rows(x.v, index)};
}

}  // namespace

template <class T>
Sv<T> ElementBondHead<T>::query_features(const Ctx<T>& ctx, const ContextGraph& graph,
                                         const Sv<T>& encoded,
                                         std::span<const Vec3> positions) const {
  const int q = static_cast<int>(positions.size());
  if (q == 0) throw std::invalid_argument("element-and-bond head needs at least one query");
  if (encoded.rows() != graph.size())
    throw ShapeError("element-and-bond head: " + std::to_string(encoded.rows())
                     + " encoded rows for " + std::to_string(graph.size()) + " context nodes");
  std::vector<int> sender, dest;
  for (int i = 0; i < q; ++i)
    for (int j : k_nearest(graph.coords, positions[i], cfg_.field_knn)) {
      sender.push_back(j);
      dest.push_back(i);
    }
  Sv<T> edges = query_edges(ctx, edge_embed_, graph, dest, positions, sender);
  Sv<T> m = message_(ctx, encoded, edges, sender);
  return {ad::scatter_add_rows(m.s, dest, q), ad::scatter_add_rows(m.v, dest, q)};
}

template <class T>
FieldOutput<T> ElementBondHead<T>::operator()(const Ctx<T>& ctx, const ContextGraph& graph,
                                              const Sv<T>& encoded,
                                              const FieldQueries& queries) const {
  const int nq = static_cast<int>(queries.positions.size());
  if (!queries.with_bonds.empty() && static_cast<int>(queries.with_bonds.size()) != nq)
    throw ShapeError("element-and-bond head: bond flags do not match the queries");
  FieldOutput<T> out;
  Sv<T> hq = query_features(ctx, graph, encoded, queries.positions);
  out.element_logits = element_mlp_(ctx, hq).s;

  const int nf = graph.num_fragment();
  std::vector<int> bond_queries;
  if (nf > 0)
    for (int i = 0; i < nq; ++i)
      if (queries.with_bonds.empty() || queries.with_bonds[i]) bond_queries.push_back(i);
  if (bond_queries.empty()) return out;

  std::vector<int> frag_node, offsets{0};
  for (int b : bond_queries) {
    for (int f = 0; f < nf; ++f) {
      out.bond_query.push_back(b);
      out.bond_atom.push_back(f);
      frag_node.push_back(graph.num_pocket + f);
    }
    offsets.push_back(static_cast<int>(out.bond_query.size()));
  }
  Sv<T> pair_edges = pair_edge_mlp_(
      ctx, query_edges(ctx, edge_embed_, graph, out.bond_query, queries.positions, frag_node));
  Sv<T> z = pair_mlp_(ctx, concat_sv<T>({gather_sv(hq, out.bond_query), gather_sv(encoded, frag_node),
                                         pair_edges}));

  // Bias block: identical for every segment since they all span the fragment.
  std::vector<BondOrder> order(static_cast<std::size_t>(nf) * nf, BondOrder::None);
  for (const Bond& b : graph.fragment_bonds) {
    order[static_cast<std::size_t>(b.i) * nf + b.j] = b.order;
    order[static_cast<std::size_t>(b.j) * nf + b.i] = b.order;
  }
  const std::size_t seg_pairs = static_cast<std::size_t>(nf) * nf;
  Array<double> bias_in(static_cast<int>(seg_pairs * bond_queries.size()), kPairBiasFeatures);
  for (int f = 0; f < nf; ++f)
    for (int g = 0; g < nf; ++g) {
      auto row = bias_in.row(f * nf + g);
      row[static_cast<int>(order[static_cast<std::size_t>(f) * nf + g])] = 1.0;
      const auto r = rbf_encode(distance(graph.coords[graph.num_pocket + f],
                                         graph.coords[graph.num_pocket + g]));
      std::copy(r.begin(), r.end(), row.begin() + kNumBondClasses);
    }
  for (std::size_t s = 1; s < bond_queries.size(); ++s)
    std::copy_n(bias_in.data.begin(), seg_pairs * kPairBiasFeatures,
                bias_in.data.begin() + static_cast<std::ptrdiff_t>(s * seg_pairs * kPairBiasFeatures));
  Var<T> bias = bias_(ctx, ctx.tape.constant(cast_array<T>(bias_in)));

  Sv<T> qv = query_lin_(ctx, z), kv = key_lin_(ctx, z), vv = value_lin_(ctx, z);
  const int dh = cfg_.field_scalar / cfg_.heads;
  Var<T> as = ad::segment_attention(qv.s, kv.s, vv.s, bias, offsets, cfg_.heads,
                                    static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  Var<T> av = vector_attention(qv.v, kv.v, vv.v, bias, offsets, cfg_.heads);
  Sv<T> a = attn_out_(ctx, Sv<T>{as, av});
  Sv<T> z2{ad::add(z.s, a.s), ad::add(z.v, a.v)};
  out.bond_logits = bond_mlp_(ctx, z2).s;
  out.has_bonds = true;
  return out;
}

template <class T>
Var<T> vector_attention(Var<T> queries, Var<T> keys, Var<T> values, Var<T> bias,
                        std::span<const int> offsets, int heads, Array<T>* weights) {
  if (queries.cols() % 3 != 0 || (queries.cols() / 3) % heads != 0)
    throw ShapeError("vector_attention: " + std::to_string(queries.cols() / 3)
                     + " vector channels do not split into " + std::to_string(heads) + " heads");
  return ad::segment_attention(queries, keys, values, bias, offsets, heads, T(1), weights);
}

template struct GmmVars<float>;
template struct GmmVars<double>;
template Var<float> gmm_log_pdf(const GmmVars<float>&, Var<float>);
template Var<double> gmm_log_pdf(const GmmVars<double>&, Var<double>);
template class FrontierHead<float>;
template class FrontierHead<double>;
template class PositionHead<float>;
template class PositionHead<double>;
template class ElementBondHead<float>;
template class ElementBondHead<double>;
template Var<float> vector_attention(Var<float>, Var<float>, Var<float>, Var<float>,
                                     std::span<const int>, int, Array<float>*);
template Var<double> vector_attention(Var<double>, Var<double>, Var<double>, Var<double>,
                                      std::span<const int>, int, Array<double>*);

}  // namespace pgen
