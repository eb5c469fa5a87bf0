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

#include "pgen/molgraph.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace pgen {
namespace {

constexpr std::array<std::string_view, kNumElements> kElementSymbols = {"C", "N", "O", "F",
                                                                       "P", "S", "Cl"};
constexpr std::array<int, kNumElements> kMaxValence = {4, 3, 2, 1, 5, 6, 1};
constexpr std::array<std::string_view, kNumAminoAcids> kAminoAcids = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU",
    "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "UNK"};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(a[i])) != std::toupper(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

}  // namespace

std::string_view element_symbol(Element e) {
  if (e == Element::Nothing) return "Nothing";
  return kElementSymbols.at(static_cast<int>(e));
}

std::optional<Element> try_element_from_symbol(std::string_view symbol) {
  for (int i = 0; i < kNumElements; ++i)
    if (iequals(symbol, kElementSymbols[i])) return static_cast<Element>(i);
  return std::nullopt;
}

Element element_from_symbol(std::string_view symbol) {
  if (auto e = try_element_from_symbol(symbol)) return *e;
  throw std::invalid_argument("element '" + std::string(symbol) + "' is outside the vocabulary");
}

int max_valence(Element e) {
  if (e == Element::Nothing) throw std::invalid_argument("Nothing has no valence");
  return kMaxValence.at(static_cast<int>(e));
}

AminoAcid amino_acid_from_name(std::string_view name) {
  for (int i = 0; i < kNumAminoAcids; ++i)
    if (iequals(name, kAminoAcids[i])) return static_cast<AminoAcid>(i);
  return AminoAcid::UNK;
}

std::string_view amino_acid_name(AminoAcid a) { return kAminoAcids.at(static_cast<int>(a)); }

int bond_half_units(BondOrder b) {
  switch (b) {
    case BondOrder::None: return 0;
    case BondOrder::Single: return 2;
    case BondOrder::Double: return 4;
    case BondOrder::Triple: return 6;
    case BondOrder::Aromatic: return 3;
  }
  return 0;
}

int MoleculeFragment::add_atom(Element element, const Vec3& coord) {
  if (element == Element::Nothing) throw std::invalid_argument("cannot add a Nothing atom");
  for (double c : coord)
    if (!std::isfinite(c)) throw std::invalid_argument("atom coordinate is not finite");
  Atom a;
  a.element = element;
  a.coord = coord;
  a.origin = Origin::Fragment;
  atoms_.push_back(a);
  adjacency_.emplace_back();
  valence_.push_back(0);
  return size() - 1;
}

BondOrder MoleculeFragment::bond(int i, int j) const {
  for (const auto& [n, o] : adjacency_.at(i))
    if (n == j) return o;
  return BondOrder::None;
}

int MoleculeFragment::free_half_units(int i) const {
  return 2 * max_valence(atoms_.at(i).element) - valence_.at(i);
}

void MoleculeFragment::add_bond(int i, int j, BondOrder order) {
  if (i < 0 || j < 0 || i >= size() || j >= size()) throw std::out_of_range("bond atom index");
  if (i == j) throw ValenceError("self-bond on atom " + std::to_string(i));
  if (order == BondOrder::None) return;
  if (bond(i, j) != BondOrder::None)
    throw ValenceError("atoms " + std::to_string(i) + " and " + std::to_string(j) + " already bonded");
  const int h = bond_half_units(order);
  if (h > free_half_units(i) || h > free_half_units(j))
    throw ValenceError("bond " + std::to_string(i) + "-" + std::to_string(j)
                       + " exceeds the maximum valence");
  adjacency_[i].emplace_back(j, order);
  adjacency_[j].emplace_back(i, order);
  valence_[i] += h;
  valence_[j] += h;
  bonds_.push_back({std::min(i, j), std::max(i, j), order});
}

int MoleculeFragment::bond_count(int i, BondOrder order) const {
  int n = 0;
  for (const auto& nb : adjacency_.at(i)) n += nb.second == order ? 1 : 0;
  return n;
}

bool MoleculeFragment::connected() const {
  if (atoms_.empty()) return true;
  std::vector<char> seen(atoms_.size(), 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    for (const auto& nb : adjacency_[a])
      if (!seen[nb.first]) {
        seen[nb.first] = 1;
        ++count;
        stack.push_back(nb.first);
      }
  }
  return count == size();
}

MoleculeFragment MoleculeFragment::subset(std::span<const int> keep) const {
  MoleculeFragment out;
  std::vector<int> remap(atoms_.size(), -1);
  for (std::size_t n = 0; n < keep.size(); ++n) {
    remap.at(keep[n]) = static_cast<int>(n);
    out.add_atom(atoms_[keep[n]].element, atoms_[keep[n]].coord);
  }
  for (const Bond& b : bonds_)
    if (remap[b.i] >= 0 && remap[b.j] >= 0) out.add_bond(remap[b.i], remap[b.j], b.order);
  return out;
}

bool MoleculeFragment::operator==(const MoleculeFragment& o) const {
  if (size() != o.size() || bonds_.size() != o.bonds_.size()) return false;
  for (int i = 0; i < size(); ++i)
    if (atoms_[i].element != o.atoms_[i].element || atoms_[i].coord != o.atoms_[i].coord)
      return false;
  for (const Bond& b : bonds_)
    if (o.bond(b.i, b.j) != b.order) return false;
  return true;
}

std::array<double, kRbfCount> rbf_encode(double d) {
  if (!std::isfinite(d)) throw std::invalid_argument("rbf_encode: distance is not finite");
  if (d < 0) throw std::invalid_argument("rbf_encode: negative distance");
  constexpr double spacing = kRbfMax / (kRbfCount - 1);
  constexpr double gamma = 1.0 / (2.0 * spacing * spacing);
  std::array<double, kRbfCount> out{};
  for (int m = 0; m < kRbfCount; ++m) {
    const double diff = d - m * spacing;
    out[m] = std::exp(-gamma * diff * diff);
  }
  return out;
}

std::vector<int> k_nearest(std::span<const Vec3> points, const Vec3& query, int k, int exclude) {
  std::vector<std::pair<double, int>> order;
  order.reserve(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (static_cast<int>(j) == exclude) continue;
    const Vec3 d = points[j] - query;
    order.emplace_back(dot(d, d), static_cast<int>(j));
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
  std::vector<int> out(take);
  for (std::size_t n = 0; n < take; ++n) out[n] = order[n].second;
  return out;
}

ContextGraph build_context(std::span<const Atom> pocket, const MoleculeFragment& fragment, int k) {
  if (pocket.empty()) throw std::invalid_argument("build_context: empty pocket");
  if (k < 1) throw std::invalid_argument("build_context: k must be at least 1");
  const std::size_t total = pocket.size() + static_cast<std::size_t>(fragment.size());
  if (total < 2) throw std::invalid_argument("build_context: fewer than 2 atoms");

  ContextGraph g;
  g.k = k;
  g.num_pocket = static_cast<int>(pocket.size());
  Vec3 c{0, 0, 0};
  for (const Atom& a : pocket) c = c + a.coord;
  g.centroid = (1.0 / static_cast<double>(pocket.size())) * c;
  for (const Atom& a : pocket) {
    Atom n = a;
    n.origin = Origin::Pocket;
    g.nodes.push_back(n);
  }
  for (const Atom& a : fragment.atoms()) g.nodes.push_back(a);
  g.coords.reserve(total);
  for (const Atom& a : g.nodes) g.coords.push_back(a.coord - g.centroid);

  g.fragment_valence_half.resize(fragment.size());
  g.fragment_bond_counts.resize(fragment.size());
  for (int i = 0; i < fragment.size(); ++i) {
    g.fragment_valence_half[i] = fragment.valence_half_units(i);
    for (int o = 0; o < 4; ++o)
      g.fragment_bond_counts[i][o] = fragment.bond_count(i, static_cast<BondOrder>(o + 1));
  }
  g.fragment_bonds = fragment.bonds();

  const int np = g.num_pocket;
  for (int i = 0; i < g.size(); ++i) {
    for (int j : k_nearest(g.coords, g.coords[i], k, i)) {
      g.edge_src.push_back(j);
      g.edge_dst.push_back(i);
      BondOrder b = BondOrder::None;
      if (i >= np && j >= np) b = fragment.bond(i - np, j - np);
      g.edge_bond.push_back(b);
    }
  }
  return g;
}

NodeFeatures featurize_nodes(const ContextGraph& graph) {
  const int n = graph.size();
  NodeFeatures f{Array<double>(n, kNodeScalarFeatures), Array<double>(n, 3)};
  constexpr int aa_off = kNumElements;
  constexpr int bb_off = aa_off + kNumAminoAcids;
  constexpr int val_off = bb_off + 1;
  constexpr int cnt_off = val_off + 1;
  constexpr int pro_off = cnt_off + 4;
  for (int i = 0; i < n; ++i) {
    const Atom& a = graph.nodes[i];
    const int e = static_cast<int>(a.element);
    if (e < 0 || e >= kNumElements)
      throw std::invalid_argument("featurize_nodes: element '" + std::string(element_symbol(a.element))
                                  + "' is outside the vocabulary");
    f.scalars(i, e) = 1.0;
    if (i < graph.num_pocket) {
      f.scalars(i, aa_off + static_cast<int>(a.residue)) = 1.0;
      f.scalars(i, bb_off) = a.backbone ? 1.0 : 0.0;
      f.scalars(i, pro_off) = 1.0;
    } else {
      const int fi = i - graph.num_pocket;
      f.scalars(i, val_off) = graph.fragment_valence_half[fi] / 2.0;
      for (int o = 0; o < 4; ++o) f.scalars(i, cnt_off + o) = graph.fragment_bond_counts[fi][o];
    }
    for (int d = 0; d < 3; ++d) f.vectors(i, d) = graph.coords[i][d];
  }
  return f;
}

void edge_feature_row(const Vec3& from, const Vec3& to, BondOrder bond, std::span<double> scalars,
                      std::span<double> direction) {
  const Vec3 delta = to - from;
  const double d = norm(delta);
  if (!(d >= 1e-6)) throw std::invalid_argument("edge between coincident atoms (d < 1e-6 A)");
  const auto rbf = rbf_encode(d);
  std::copy(rbf.begin(), rbf.end(), scalars.begin());
  for (int b = 0; b < kNumBondClasses; ++b) scalars[kRbfCount + b] = 0.0;
  scalars[kRbfCount + static_cast<int>(bond)] = 1.0;
  scalars[kRbfCount + kNumBondClasses] = bond == BondOrder::None ? 0.0 : 1.0;
  for (int k = 0; k < 3; ++k) direction[k] = delta[k] / d;
}

EdgeFeatures featurize_edges(const ContextGraph& graph) {
  const int e = graph.num_edges();
  EdgeFeatures f{Array<double>(e, kEdgeScalarFeatures), Array<double>(e, 3)};
  for (int n = 0; n < e; ++n)
    edge_feature_row(graph.coords[graph.edge_dst[n]], graph.coords[graph.edge_src[n]],
                     graph.edge_bond[n], f.scalars.row(n), f.vectors.row(n));
  return f;
}

}  // namespace pgen
