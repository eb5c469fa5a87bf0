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

#include "pgen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pgen {

namespace {

Vec3 unit_vector(Rng& rng) {
  for (;;) {
    Vec3 v{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    const double n = norm(v);
    if (n > 1e-9) return (1.0 / n) * v;
  }
}

Element ligand_element(Rng& rng) {
  const double u = uniform01(rng);
  return u < 0.6 ? Element::C : (u < 0.8 ? Element::N : Element::O);
}

}  // namespace

MoleculeFragment random_ligand(Rng& rng, int atoms, const ToyConfig& cfg) {
  if (atoms < 1) throw std::invalid_argument("random_ligand: need at least one atom");
  for (int restart = 0; restart < 100; ++restart) {
    MoleculeFragment mol;
    mol.add_atom(Element::C, {0, 0, 0});
    bool stuck = false;
    while (mol.size() < atoms && !stuck) {
      std::vector<int> parents;
      for (int i = 0; i < mol.size(); ++i)
        if (mol.free_half_units(i) >= 2 && mol.neighbors(i).size() < 3) parents.push_back(i);
      if (parents.empty()) {
        stuck = true;
        break;
      }
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const int p = parents[uniform_index(rng, parents.size())];
        Element e = ligand_element(rng);
        const Vec3 pos = mol.atom(p).coord + cfg.bond_length * unit_vector(rng);
        bool clear = true;
        for (int i = 0; i < mol.size() && clear; ++i)
          if (i != p && distance(mol.atom(i).coord, pos) < cfg.min_nonbonded) clear = false;
        if (!clear) continue;
        BondOrder order = BondOrder::Single;
        if (uniform01(rng) < 0.2 && mol.free_half_units(p) >= 4 && max_valence(e) >= 2) order = BondOrder::Double;
        const int i = mol.add_atom(e, pos);
        mol.add_bond(p, i, order);
        placed = true;
      }
      if (!placed) stuck = true;
    }
    if (mol.size() == atoms) return mol;
  }
  throw std::runtime_error("random_ligand: could not grow a ligand of " + std::to_string(atoms) + " atoms");
}

std::vector<Atom> random_pocket_around(const MoleculeFragment& ligand, Rng& rng, const ToyConfig& cfg) {
  Vec3 c{0, 0, 0};
  for (const Atom& a : ligand.atoms()) c = c + a.coord;
  c = (1.0 / ligand.size()) * c;
  double radius = 0;
  for (const Atom& a : ligand.atoms()) radius = std::max(radius, distance(a.coord, c));
  const double box = radius + cfg.pocket_outer;
  std::vector<Atom> pocket;
  for (int attempt = 0; attempt < 200000 && static_cast<int>(pocket.size()) < cfg.pocket_atoms; ++attempt) {
    const Vec3 p = c + Vec3{uniform(rng, -box, box), uniform(rng, -box, box), uniform(rng, -box, box)};
    double dmin = std::numeric_limits<double>::infinity();
    for (const Atom& a : ligand.atoms()) dmin = std::min(dmin, distance(a.coord, p));
    if (dmin < cfg.pocket_inner || dmin > cfg.pocket_outer) continue;
    bool clear = true;
    for (const Atom& a : pocket)
      if (distance(a.coord, p) < cfg.pocket_spacing) clear = false;
    if (!clear) continue;
    Atom a;
    const double u = uniform01(rng);
    a.element = u < 0.6 ? Element::C : (u < 0.8 ? Element::N : (u < 0.98 ? Element::O : Element::S));
    a.coord = p;
    a.origin = Origin::Pocket;
    a.residue = static_cast<AminoAcid>(uniform_index(rng, 20));
    a.backbone = a.element != Element::S && uniform01(rng) < 0.4;
    pocket.push_back(a);
  }
  if (static_cast<int>(pocket.size()) < cfg.pocket_atoms)
    throw std::runtime_error("random_pocket_around: could not place the pocket atoms");
  return pocket;
}

std::vector<PocketLigandPair> make_toy_dataset(int pairs, std::uint64_t seed, const ToyConfig& cfg) {
  if (pairs < 1) throw std::invalid_argument("toy dataset needs at least one pair");
  Rng rng(seed);
  std::vector<PocketLigandPair> out;
  for (int p = 0; p < pairs; ++p) {
    const int n = cfg.min_ligand_atoms
                  + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cfg.max_ligand_atoms - cfg.min_ligand_atoms + 1)));
    PocketLigandPair pair;
    pair.ligand = random_ligand(rng, n, cfg);
    // Place each pair away from the origin so centering is exercised.
    const Vec3 shift{uniform(rng, -20, 20), uniform(rng, -20, 20), uniform(rng, -20, 20)};
    MoleculeFragment moved;
    for (const Atom& a : pair.ligand.atoms()) moved.add_atom(a.element, a.coord + shift);
    for (const Bond& b : pair.ligand.bonds()) moved.add_bond(b.i, b.j, b.order);
    pair.ligand = std::move(moved);
    pair.pocket = random_pocket_around(pair.ligand, rng, cfg);
    out.push_back(std::move(pair));
  }
  return out;
}

std::array<Vec3, 3> random_orthogonal(Rng& rng, bool reflect) {
  // Gram-Schmidt on Gaussian columns yields a Haar-distributed rotation.
  Vec3 a{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
  Vec3 b{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
  a = (1.0 / norm(a)) * a;
  b = b - dot(a, b) * a;
  b = (1.0 / norm(b)) * b;
  Vec3 c = cross(a, b);
  if (reflect) c = -1.0 * c;
  return {a, b, c};  // rows
}

Vec3 apply(const std::array<Vec3, 3>& m, const Vec3& v) { return {dot(m[0], v), dot(m[1], v), dot(m[2], v)}; }

}  // namespace pgen
