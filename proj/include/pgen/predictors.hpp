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

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pgen/encoder.hpp"
#include "pgen/geomlayers.hpp"
#include "pgen/molgraph.hpp"
#include "pgen/random.hpp"

namespace pgen {

struct PredictorConfig {
  int frontier_scalar = 128;
  int frontier_vector = 32;
  int position_scalar = 128;
  int position_vector = 128;
  int components = 3;
  int field_scalar = 128;  // element-and-bond hidden widths
  int field_vector = 32;
  int field_edge_scalar = 64;
  int field_edge_vector = 64;
  int field_knn = 32;
  int heads = 4;

  void validate() const;
};

/// Diagonal-covariance Gaussian mixture over a 3-D offset.
struct GmmParams {
  std::vector<double> weights;
  std::vector<Vec3> means;
  std::vector<Vec3> variances;

  int components() const { return static_cast<int>(weights.size()); }
  void validate() const;
};

/// log sum_k pi_k N(x; mu_k, diag var_k), evaluated with log-sum-exp.
double gmm_log_pdf(const GmmParams& gmm, const Vec3& x);
/// Component drawn from pi, then an independent normal draw per axis.
/// `component`, when given, receives the drawn component index.
Vec3 gmm_sample(const GmmParams& gmm, Rng& rng, int* component = nullptr);

/// Mixture parameters for R rows on a tape.
template <class T>
struct GmmVars {
  Var<T> logits;     // (R, K), softmax gives pi
  Var<T> means;      // (R, K*3)
  Var<T> log_variances;  // (R, K*3), exp gives the diagonal variances

  GmmParams row(int r) const;
};

/// Per-row mixture log density of offsets x (R, 3): -> (R, 1).
template <class T>
Var<T> gmm_log_pdf(const GmmVars<T>& gmm, Var<T> x);

template <class T>
class FrontierHead {
 public:
  FrontierHead() = default;
  FrontierHead(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& enc,
               const PredictorConfig& cfg, double slope, Rng& rng);

  /// Frontier logits (R, 1); probabilities are their sigmoid.
  Var<T> operator()(const Ctx<T>& ctx, const Sv<T>& nodes) const;

  const GvMlp<T>& mlp() const { return mlp_; }

 private:
  GvMlp<T> mlp_;
};

template <class T>
class PositionHead {
 public:
  PositionHead() = default;
  PositionHead(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& enc,
               const PredictorConfig& cfg, double slope, Rng& rng);

  GmmVars<T> operator()(const Ctx<T>& ctx, const Sv<T>& focal) const;

  const GvMlp<T>& mlp() const { return mlp_; }
  const GvpBlock<T>& mean_head() const { return mu_; }
  const GvpBlock<T>& variance_head() const { return sigma_; }
  const GvpBlock<T>& weight_head() const { return pi_; }

 private:
  GvMlp<T> mlp_;
  GvpBlock<T> mu_, sigma_, pi_;
};

/// Query positions for the element-and-bond head. Positions are centered
/// (same frame as ContextGraph::coords).
struct FieldQueries {
  std::vector<Vec3> positions;
  std::vector<char> with_bonds;  // per query; ignored when the fragment is empty
};

template <class T>
struct FieldOutput {
  Var<T> element_logits;  // (Q, kNumElementClasses)
  Var<T> bond_logits;     // (P, kNumBondClasses); invalid when no bond rows
  bool has_bonds = false;
  // Row p of bond_logits scores the bond between query bond_query[p] and
  // fragment atom bond_atom[p] (fragment-local index).
  std::vector<int> bond_query;
  std::vector<int> bond_atom;
};

template <class T>
class ElementBondHead {
 public:
  ElementBondHead() = default;
  ElementBondHead(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& enc,
                  const PredictorConfig& cfg, double slope, Rng& rng);

  FieldOutput<T> operator()(const Ctx<T>& ctx, const ContextGraph& graph, const Sv<T>& encoded,
                            const FieldQueries& queries) const;

  /// Query representation from one message passing step over the query's
  /// nearest context atoms: (Q rows).
  Sv<T> query_features(const Ctx<T>& ctx, const ContextGraph& graph, const Sv<T>& encoded,
                       std::span<const Vec3> positions) const;

 private:
  PredictorConfig cfg_;
  GvpBlock<T> edge_embed_;
  MessageModule<T> message_;
  GvMlp<T> element_mlp_;
  GvMlp<T> pair_edge_mlp_;
  GvMlp<T> pair_mlp_;
  GvpBlock<T> query_lin_, key_lin_, value_lin_, attn_out_;
  Dense<T> bias_;
  GvMlp<T> bond_mlp_;
};

/// Per-pair triangle bias input: bond one-hot of (q, k) | RBF(|r_q - r_k|).
inline constexpr int kPairBiasFeatures = kNumBondClasses + kRbfCount;

/// Vector attention over contiguous segments: Frobenius-product logits plus
/// bias, softmax over keys, weighted sum of values. See ad::segment_attention.
template <class T>
Var<T> vector_attention(Var<T> queries, Var<T> keys, Var<T> values, Var<T> bias,
                        std::span<const int> offsets, int heads, Array<T>* weights = nullptr);

}  // namespace pgen
