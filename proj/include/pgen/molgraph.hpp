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
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pgen/diffcore.hpp"

namespace pgen {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Element vocabulary. Nothing is only a prediction class, never an atom.
enum class Element : std::uint8_t { C = 0, N, O, F, P, S, Cl, Nothing };
inline constexpr int kNumElements = 7;
inline constexpr int kNumElementClasses = 8;  // + Nothing

std::string_view element_symbol(Element e);
/// Case-insensitive lookup; throws std::invalid_argument naming the symbol.
Element element_from_symbol(std::string_view symbol);
std::optional<Element> try_element_from_symbol(std::string_view symbol);
int max_valence(Element e);

enum class AminoAcid : std::uint8_t {
  ALA = 0, ARG, ASN, ASP, CYS, GLN, GLU, GLY, HIS, ILE,
  LEU, LYS, MET, PHE, PRO, SER, THR, TRP, TYR, VAL, UNK
};
inline constexpr int kNumAminoAcids = 21;
AminoAcid amino_acid_from_name(std::string_view name);  // unknown names map to UNK
std::string_view amino_acid_name(AminoAcid a);

enum class BondOrder : std::uint8_t { None = 0, Single, Double, Triple, Aromatic };
inline constexpr int kNumBondClasses = 5;
/// Twice the bond order, so aromatic (1.5) stays integral.
int bond_half_units(BondOrder b);

enum class Origin : std::uint8_t { Pocket, Fragment };

struct Atom {
  Element element = Element::C;
  Vec3 coord{0, 0, 0};
  Origin origin = Origin::Pocket;
  AminoAcid residue = AminoAcid::UNK;  // pocket atoms only
  bool backbone = false;               // pocket atoms only
};

struct Bond {
  int i = 0;
  int j = 0;
  BondOrder order = BondOrder::Single;
};

class ValenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Partial molecule. Bond insertion enforces symmetry, the no-self-bond rule
/// and every atom's maximum valence.
class MoleculeFragment {
 public:
  int add_atom(Element element, const Vec3& coord);
  void add_bond(int i, int j, BondOrder order);

  int size() const { return static_cast<int>(atoms_.size()); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& atom(int i) const { return atoms_.at(i); }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<std::pair<int, BondOrder>>& neighbors(int i) const { return adjacency_.at(i); }

  BondOrder bond(int i, int j) const;
  int valence_half_units(int i) const { return valence_.at(i); }
  double valence(int i) const { return valence_.at(i) / 2.0; }
  /// Remaining capacity in half units.
  int free_half_units(int i) const;
  /// Number of bonds of the given order on atom i.
  int bond_count(int i, BondOrder order) const;
  bool connected() const;

  /// Sub-fragment induced by the given atom indices, in that order.
  MoleculeFragment subset(std::span<const int> keep) const;

  bool operator==(const MoleculeFragment& o) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<int, BondOrder>>> adjacency_;
  std::vector<int> valence_;
};

// Radial basis encoding of distances.
inline constexpr int kRbfCount = 64;
inline constexpr double kRbfMax = 10.0;
std::array<double, kRbfCount> rbf_encode(double d);

/// Pocket + fragment atoms with their KNN edges. Coordinates are stored
/// relative to the pocket centroid.
struct ContextGraph {
  std::vector<Atom> nodes;  // pocket atoms first, then fragment atoms
  std::vector<Vec3> coords;  // centered
  Vec3 centroid{0, 0, 0};
  int num_pocket = 0;
  int k = 0;
  // Edge e delivers a message from edge_src[e] into edge_dst[e]; edges are
  // grouped by destination in ascending order, and within a destination by
  // increasing distance.
  std::vector<int> edge_src;
  std::vector<int> edge_dst;
  std::vector<BondOrder> edge_bond;
  // Fragment valence state per fragment node (index node - num_pocket).
  std::vector<int> fragment_valence_half;
  std::vector<std::array<int, 4>> fragment_bond_counts;  // single, double, triple, aromatic
  std::vector<Bond> fragment_bonds;                      // fragment-local indices

  int size() const { return static_cast<int>(nodes.size()); }
  int num_fragment() const { return size() - num_pocket; }
  int num_edges() const { return static_cast<int>(edge_src.size()); }
  Vec3 center(const Vec3& raw) const { return raw - centroid; }
  Vec3 uncenter(const Vec3& c) const { return c + centroid; }
};

/// Node neighbours of `query` ordered by (distance, index); `exclude` is skipped.
std::vector<int> k_nearest(std::span<const Vec3> points, const Vec3& query, int k, int exclude = -1);

ContextGraph build_context(std::span<const Atom> pocket, const MoleculeFragment& fragment, int k);

// Node scalar layout: element one-hot | amino-acid one-hot | backbone flag |
// valence | single, double, triple, aromatic counts | is-protein flag.
inline constexpr int kNodeScalarFeatures = kNumElements + kNumAminoAcids + 1 + 1 + 4 + 1;
// Edge scalar layout: RBF(d) | bond one-hot (none first) | has-bond flag.
inline constexpr int kEdgeScalarFeatures = kRbfCount + kNumBondClasses + 1;

struct NodeFeatures {
  Array<double> scalars;  // (N, kNodeScalarFeatures)
  Array<double> vectors;  // (N, 3), centered coordinate
};

struct EdgeFeatures {
  Array<double> scalars;  // (E, kEdgeScalarFeatures)
  Array<double> vectors;  // (E, 3), unit direction src - dst
};

NodeFeatures featurize_nodes(const ContextGraph& graph);
EdgeFeatures featurize_edges(const ContextGraph& graph);

/// Edge features for a pair of centered positions with a known bond class:
/// writes kEdgeScalarFeatures scalars and a unit direction (to - from).
void edge_feature_row(const Vec3& from, const Vec3& to, BondOrder bond, std::span<double> scalars,
                      std::span<double> direction);

}  // namespace pgen
