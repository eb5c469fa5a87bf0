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

#include "pgen/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pgen/ops.hpp"

namespace pgen {

void SamplerConfig::validate() const {
  if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("sampler threshold must be in (0, 1)");
  if (max_atoms < 1) throw std::invalid_argument("sampler max_atoms must be at least 1");
  if (retries < 1) throw std::invalid_argument("sampler retries must be at least 1");
  if (!(temperature > 0)) throw std::invalid_argument("sampler temperature must be positive");
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::NoFrontier: return "no frontier";
    case Termination::FrontierExhausted: return "frontier exhausted";
    case Termination::MaxAtoms: return "max atoms";
  }
  return "unknown";
}

MoleculeFragment replay(std::span<const Atom> pocket, const GenerationTrace& trace) {
  MoleculeFragment frag;
  for (const PlacementRecord& r : trace.placements) {
    const Vec3 base = r.focal_in_pocket ? pocket[static_cast<std::size_t>(r.focal)].coord : frag.atom(r.focal).coord;
    const int i = frag.add_atom(r.element, base + r.delta);
    for (const auto& [j, order] : r.bonds) frag.add_bond(i, j, order);
  }
  return frag;
}

std::optional<int> select_focal(std::span<const double> probabilities, const SamplerConfig& cfg, Rng& rng) {
  std::vector<double> w(probabilities.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (probabilities[i] >= cfg.threshold) w[i] = probabilities[i];
  const int k = sample_weighted(std::span<const double>(w), rng);
  if (k < 0) return std::nullopt;
  return k;
}

namespace {

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> p(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logits) m = std::max(m, l / temperature);
  double z = 0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(logits[i] / temperature - m);
  for (double& x : p) x /= z;
  return p;
}

bool valid_assignment(const MoleculeFragment& frag, Element element, std::span<const BondOrder> bonds) {
  int used = 0;
  bool any = false;
  for (std::size_t f = 0; f < bonds.size(); ++f) {
    if (bonds[f] == BondOrder::None) continue;
    const int h = bond_half_units(bonds[f]);
    if (h > frag.free_half_units(static_cast<int>(f))) return false;
    used += h;
    any = true;
  }
  return any && used <= 2 * max_valence(element);
}

}  // namespace

std::optional<std::vector<BondOrder>> greedy_bonds(const MoleculeFragment& fragment, Element element,
                                                   const Array<double>& probs) {
  const int nf = fragment.size();
  if (probs.rows != nf || probs.cols != kNumBondClasses)
    throw ShapeError("greedy_bonds: probability block does not match the fragment");
  std::vector<int> order(nf);
  std::iota(order.begin(), order.end(), 0);
  auto row_max = [&](int f) { return *std::max_element(probs.row(f).begin(), probs.row(f).end()); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row_max(a) > row_max(b); });

  std::vector<BondOrder> out(nf, BondOrder::None);
  int remaining = 2 * max_valence(element);
  auto fits = [&](int f, int c) {
    const int h = bond_half_units(static_cast<BondOrder>(c));
    return h <= remaining && h <= fragment.free_half_units(f);
  };
  bool any = false;
  for (int f : order) {
    int best = 0;
    for (int c = 1; c < kNumBondClasses; ++c)
      if (fits(f, c) && probs(f, c) > probs(f, best)) best = c;
    if (best != 0) {
      out[f] = static_cast<BondOrder>(best);
      remaining -= bond_half_units(out[f]);
      any = true;
    }
  }
  if (!any) {
    // Every argmax was "none": take the most probable bond that still fits.
    int bf = -1, bc = 0;
    for (int f = 0; f < nf; ++f)
      for (int c = 1; c < kNumBondClasses; ++c)
        if (fits(f, c) && (bf < 0 || probs(f, c) > probs(bf, bc))) bf = f, bc = c;
    if (bf < 0) return std::nullopt;
    out[bf] = static_cast<BondOrder>(bc);
  }
  return out;
}

PlacementResult place_atom(const MoleculeFragment& fragment, std::span<const double> element_logits,
                           const Array<double>& bond_logits, const SamplerConfig& cfg, Rng& rng) {
  if (static_cast<int>(element_logits.size()) != kNumElementClasses)
    throw ShapeError("place_atom: expected " + std::to_string(kNumElementClasses) + " element logits");
  PlacementResult res;
  const std::vector<double> pe = softmax(element_logits, cfg.temperature);
  const int e = sample_weighted(std::span<const double>(pe), rng);
  if (e < 0 || e == static_cast<int>(Element::Nothing)) {
    res.rejection = Rejection::Nothing;
    return res;
  }
  Placement pl;
  pl.element = static_cast<Element>(e);
  pl.element_probability = pe[e];
  const int nf = fragment.size();
  if (nf == 0) {
    res.placement = std::move(pl);
    return res;
  }
  if (bond_logits.rows != nf || bond_logits.cols != kNumBondClasses)
    throw ShapeError("place_atom: bond logits do not match the fragment");

  Array<double> pb(nf, kNumBondClasses);
  for (int f = 0; f < nf; ++f) {
    const auto p = softmax(bond_logits.row(f), cfg.temperature);
    std::copy(p.begin(), p.end(), pb.row(f).begin());
  }
  std::optional<std::vector<BondOrder>> chosen;
  std::vector<BondOrder> draw(nf);
  for (int attempt = 0; attempt < cfg.retries && !chosen; ++attempt) {
    for (int f = 0; f < nf; ++f)
      draw[f] = static_cast<BondOrder>(sample_weighted(std::span<const double>(pb.row(f)), rng));
    if (valid_assignment(fragment, pl.element, draw)) chosen = draw;
  }
  if (!chosen) chosen = greedy_bonds(fragment, pl.element, pb);
  if (!chosen) {
    res.rejection = Rejection::NoValidBonds;
    return res;
  }
  for (int f = 0; f < nf; ++f)
    if ((*chosen)[f] != BondOrder::None) {
      pl.bonds.emplace_back(f, (*chosen)[f]);
      pl.bond_probabilities.push_back(pb(f, static_cast<int>((*chosen)[f])));
    }
  res.placement = std::move(pl);
  return res;
}

Rng molecule_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

SampleResult sample_molecule(const Model<float>& model, std::span<const Atom> pocket,
                             const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  if (pocket.empty()) throw std::invalid_argument("sample_molecule: empty pocket");
  SampleResult out;
  MoleculeFragment& frag = out.molecule;
  const int np = static_cast<int>(pocket.size());
  const int k = model.config().encoder.knn;
  std::vector<char> removed_pocket(np, 0), removed_fragment;

  for (;;) {
    if (frag.size() >= cfg.max_atoms) {
      out.trace.reason = Termination::MaxAtoms;
      break;
    }
    const ContextGraph graph = build_context(pocket, frag, k);
    Tape<float> tape(false);
    const Ctx<float> ctx = model.context(tape);
    const EncoderOutput<float> enc = model.encode(ctx, graph);

    const bool first = frag.empty();
    const int count = first ? np : frag.size();
    const int offset = first ? 0 : np;
    std::vector<int> rows(count);
    std::iota(rows.begin(), rows.end(), offset);
    const Var<float> logits = model.frontier()(
        ctx, Sv<float>{ad::gather_rows(enc.nodes.s, rows), ad::gather_rows(enc.nodes.v, rows)});
    std::vector<char>& removed = first ? removed_pocket : removed_fragment;
    std::vector<double> probs(count);
    bool any_candidate = false;
    for (int i = 0; i < count; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.value().data[i])));
      any_candidate = any_candidate || p >= cfg.threshold;
      probs[i] = removed[i] ? 0.0 : p;
    }
    const std::optional<int> focal = select_focal(probs, cfg, rng);
    if (!focal) {
      out.trace.reason = any_candidate ? Termination::FrontierExhausted : Termination::NoFrontier;
      break;
    }
    const int node = offset + *focal;
    const GmmParams gmm = model.position()(ctx, Sv<float>{ad::gather_rows(enc.nodes.s, std::span<const int>(&node, 1)),
                                                          ad::gather_rows(enc.nodes.v, std::span<const int>(&node, 1))})
                              .row(0);
    const Vec3 base = first ? pocket[*focal].coord : frag.atom(*focal).coord;

    bool accepted = false;
    for (int attempt = 1; attempt <= cfg.retries && !accepted; ++attempt) {
      const Vec3 delta = gmm_sample(gmm, rng);
      const Vec3 pos = base + delta;
      bool coincident = false;
      for (const Vec3& c : graph.coords)
        if (distance(graph.center(pos), c) < 1e-6) coincident = true;
      if (coincident) continue;
      FieldQueries q{{graph.center(pos)}, {1}};
      const FieldOutput<float> field = model.field()(ctx, graph, enc.nodes, q);
      std::vector<double> el(kNumElementClasses);
      for (int c = 0; c < kNumElementClasses; ++c) el[c] = field.element_logits.value()(0, c);
      Array<double> bl(field.has_bonds ? frag.size() : 0, kNumBondClasses);
      if (field.has_bonds) bl = cast_array<double>(field.bond_logits.value());
      PlacementResult res = place_atom(frag, el, bl, cfg, rng);
      if (!res.placement) continue;

      PlacementRecord rec;
      rec.focal_in_pocket = first;
      rec.focal = *focal;
      rec.delta = delta;
      rec.element = res.placement->element;
      rec.bonds = res.placement->bonds;
      rec.focal_probability = probs[*focal];
      rec.element_probability = res.placement->element_probability;
      rec.bond_probabilities = res.placement->bond_probabilities;
      rec.attempts = attempt;
      const int i = frag.add_atom(rec.element, pos);
      for (const auto& [j, order] : rec.bonds) frag.add_bond(i, j, order);
      removed_fragment.push_back(0);
      out.trace.placements.push_back(std::move(rec));
      accepted = true;
    }
    if (!accepted) removed[*focal] = 1;
  }
  return out;
}

}  // namespace pgen
