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

// Brute-force reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pgen/molgraph.hpp"

namespace pgen::oracle {

/// Every simple cycle as a bitmask over bond indices (at most 64 bonds).
inline std::vector<std::uint64_t> all_cycles(const MoleculeFragment& mol) {
  const int n = mol.size();
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // neighbour, bond index
  for (std::size_t b = 0; b < mol.bonds().size(); ++b) {
    adj[mol.bonds()[b].i].push_back({mol.bonds()[b].j, static_cast<int>(b)});
    adj[mol.bonds()[b].j].push_back({mol.bonds()[b].i, static_cast<int>(b)});
  }
  std::set<std::uint64_t> found;
  // Cycles rooted at their smallest vertex; both directions collapse in the set.
  for (int s = 0; s < n; ++s) {
    std::vector<char> on_path(n, 0);
    auto dfs = [&](auto&& self, int v, std::uint64_t edges, int depth) -> void {
      for (const auto& [w, b] : adj[v]) {
        const std::uint64_t bit = std::uint64_t{1} << b;
        if (edges & bit) continue;
        if (w == s && depth >= 2) {
          found.insert(edges | bit);
        } else if (w > s && !on_path[w]) {
          on_path[w] = 1;
          self(self, w, edges | bit, depth + 1);
          on_path[w] = 0;
        }
      }
    };
    on_path[s] = 1;
    dfs(dfs, s, 0, 0);
  }
  return {found.begin(), found.end()};
}

/// Sizes of a minimum cycle basis: shortest cycles first, kept when they are
/// independent of the ones already kept over GF(2).
inline std::vector<int> minimum_cycle_basis_sizes(const MoleculeFragment& mol) {
  std::vector<std::uint64_t> cycles = all_cycles(mol);
  std::stable_sort(cycles.begin(), cycles.end(),
                   [](std::uint64_t a, std::uint64_t b) { return __builtin_popcountll(a) < __builtin_popcountll(b); });
  std::vector<std::uint64_t> basis;  // reduced rows, each with a distinct leading bit
  std::vector<int> sizes;
  for (std::uint64_t c : cycles) {
    std::uint64_t r = c;
    for (std::uint64_t row : basis)
      if (r & (std::uint64_t{1} << (63 - __builtin_clzll(row)))) r ^= row;
    if (r == 0) continue;
    basis.push_back(r);
    std::sort(basis.begin(), basis.end(), std::greater<>());
    sizes.push_back(__builtin_popcountll(c));
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

inline std::map<int, double> ring_presence(const std::vector<MoleculeFragment>& mols) {
  std::map<int, double> out;
  for (int s = 3; s <= 9; ++s) {
    int with = 0;
    for (const MoleculeFragment& m : mols) {
      const std::vector<int> sizes = minimum_cycle_basis_sizes(m);
      with += std::find(sizes.begin(), sizes.end(), s) != sizes.end();
    }
    out[s] = mols.empty() ? 0.0 : static_cast<double>(with) / mols.size();
  }
  return out;
}

/// Add-one histogram KL written out longhand.
inline double histogram_kl(const std::vector<double>& ref, const std::vector<double>& gen, double lo, double hi,
                           int bins) {
  std::vector<double> p(bins, 1.0), q(bins, 1.0);
  const double width = (hi - lo) / bins;
  for (double v : ref) p[std::min(bins - 1, std::max(0, static_cast<int>((v - lo) / width)))] += 1;
  for (double v : gen) q[std::min(bins - 1, std::max(0, static_cast<int>((v - lo) / width)))] += 1;
  double kl = 0;
  for (int b = 0; b < bins; ++b) {
    const double pb = p[b] / (ref.size() + bins), qb = q[b] / (gen.size() + bins);
    kl += pb * std::log(pb / qb);
  }
  return kl;
}

/// Graph from an element string and bond list; coordinates lie on a helix.
inline MoleculeFragment build(const std::string& elements, const std::vector<std::pair<int, int>>& bonds,
                              BondOrder order = BondOrder::Single) {
  MoleculeFragment m;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const double t = static_cast<double>(i);
    m.add_atom(element_from_symbol(std::string(1, elements[i])), {1.4 * std::cos(t), 1.4 * std::sin(t), 0.8 * t});
  }
  for (const auto& [i, j] : bonds) m.add_bond(i, j, order);
  return m;
}

inline std::vector<std::pair<int, int>> ring(int first, int size) {
  std::vector<std::pair<int, int>> b;
  for (int k = 0; k < size; ++k) b.push_back({first + k, first + (k + 1) % size});
  return b;
}

inline std::vector<std::pair<int, int>> join(std::vector<std::pair<int, int>> a,
                                             const std::vector<std::pair<int, int>>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct NamedMolecule {
  std::string name;
  MoleculeFragment mol;
};

/// Hand-built ring systems of at most 12 atoms.
inline std::vector<NamedMolecule> ring_fixtures() {
  std::vector<NamedMolecule> v;
  v.push_back({"benzene", build("CCCCCC", ring(0, 6), BondOrder::Aromatic)});
  v.push_back({"cyclohexane", build("CCCCCC", ring(0, 6))});
  v.push_back({"hexane", build("CCCCCC", {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}})});
  v.push_back({"cyclopropane", build("CCC", ring(0, 3))});
  v.push_back({"oxetane", build("COCC", ring(0, 4))});
  v.push_back({"indane", build("CCCCCCCCC", join(ring(0, 6), {{0, 6}, {6, 7}, {7, 8}, {8, 1}}))});
  v.push_back({"decalin", build("CCCCCCCCCC", join(ring(0, 6), {{0, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 1}}))});
  v.push_back({"spiro", build("CCCCCCCCCC", join(ring(0, 5), {{0, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 0}}))});
  v.push_back({"norbornane", build("CCCCCCC", join(ring(0, 6), {{0, 6}, {6, 3}}))});
  v.push_back({"cubane", build("CCCCCCCC", join(join(ring(0, 4), ring(4, 4)), {{0, 4}, {1, 5}, {2, 6}, {3, 7}}))});
  v.push_back({"methylcyclobutane", build("CCCCC", join(ring(0, 4), {{0, 4}}))});
  v.push_back({"bicyclohexyl", build("CCCCCCCCCCCC", join(join(ring(0, 6), ring(6, 6)), {{0, 6}}))});
  v.push_back({"cycloheptane", build("CCCCCCC", ring(0, 7))});
  v.push_back({"azocane", build("NCCCCCCC", ring(0, 8))});
  v.push_back({"cyclononane", build("CCCCCCCCC", ring(0, 9))});
  v.push_back({"cyclododecane", build("CCCCCCCCCCCC", ring(0, 12))});
  v.push_back({"bicyclobutane", build("CCCC", join(ring(0, 4), {{0, 2}}))});
  v.push_back({"tetrahedrane", build("CCCC", join(ring(0, 4), {{0, 2}, {1, 3}}))});
  v.push_back({"prismane", build("CCCCCC", join(join(ring(0, 3), ring(3, 3)), {{0, 3}, {1, 4}, {2, 5}}))});
  v.push_back({"adamantane", build("CCCCCCCCCC", join(ring(0, 6), {{1, 6}, {6, 7}, {7, 8}, {8, 3}, {7, 9}, {9, 5}}))});
  v.push_back({"azulene", build("CCCCCCCCCC", join(ring(0, 7), {{0, 7}, {7, 8}, {8, 9}, {9, 1}}))});
  return v;
}

}  // namespace pgen::oracle
