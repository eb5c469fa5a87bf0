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

#include "pgen/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace pgen {

namespace {

using EdgeSet = std::vector<std::uint64_t>;

struct CycleCandidate {
  int length;
  EdgeSet edges;
};

bool reduce(EdgeSet& row, const std::vector<std::pair<int, EdgeSet>>& basis) {
  for (const auto& [pivot, b] : basis)
    if (row[pivot / 64] >> (pivot % 64) & 1)
      for (std::size_t w = 0; w < row.size(); ++w) row[w] ^= b[w];
  for (std::uint64_t w : row)
    if (w != 0) return true;
  return false;
}

int lowest_bit(const EdgeSet& row) {
  for (std::size_t w = 0; w < row.size(); ++w)
    if (row[w] != 0) return static_cast<int>(w * 64) + std::countr_zero(row[w]);
  return -1;
}

}  // namespace

std::vector<int> sssr_ring_sizes(const MoleculeFragment& mol) {
  const int n = mol.size();
  const auto& bonds = mol.bonds();
  const int m = static_cast<int>(bonds.size());
  if (m == 0) return {};
  // Cycle rank = E - V + components.
  std::vector<int> comp(n, -1);
  int components = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = components;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (const auto& nb : mol.neighbors(a))
        if (comp[nb.first] < 0) comp[nb.first] = components, stack.push_back(nb.first);
    }
    ++components;
  }
  const int rank = m - n + components;
  if (rank <= 0) return {};

  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbour, edge id)
  for (int e = 0; e < m; ++e) {
    adj[bonds[e].i].emplace_back(bonds[e].j, e);
    adj[bonds[e].j].emplace_back(bonds[e].i, e);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  const std::size_t words = (static_cast<std::size_t>(m) + 63) / 64;

  // Horton candidates: v -> x, edge xy, y -> v along BFS shortest paths.
  std::vector<CycleCandidate> cands;
  std::set<EdgeSet> seen;
  for (int v = 0; v < n; ++v) {
    std::vector<int> dist(n, -1), parent_edge(n, -1), parent(n, -1);
    std::queue<int> q;
    dist[v] = 0;
    q.push(v);
    while (!q.empty()) {
      const int a = q.front();
      q.pop();
      for (const auto& [b, e] : adj[a])
        if (dist[b] < 0) {
          dist[b] = dist[a] + 1;
          parent[b] = a;
          parent_edge[b] = e;
          q.push(b);
        }
    }
    for (int e = 0; e < m; ++e) {
      const int x = bonds[e].i, y = bonds[e].j;
      if (dist[x] < 0 || dist[y] < 0) continue;
      if (parent_edge[x] == e || parent_edge[y] == e) continue;
      std::vector<int> px, py;
      for (int a = x; a != v; a = parent[a]) px.push_back(a);
      for (int a = y; a != v; a = parent[a]) py.push_back(a);
      bool disjoint = true;
      for (int a : px)
        if (std::find(py.begin(), py.end(), a) != py.end()) disjoint = false;
      if (!disjoint) continue;
      EdgeSet es(words, 0);
      auto set_edge = [&](int id) { es[id / 64] ^= std::uint64_t{1} << (id % 64); };
      set_edge(e);
      for (int a : px) set_edge(parent_edge[a]);
      for (int a : py) set_edge(parent_edge[a]);
      if (seen.insert(es).second)
        cands.push_back({static_cast<int>(px.size() + py.size()) + 1, std::move(es)});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const CycleCandidate& a, const CycleCandidate& b) { return a.length < b.length; });

  std::vector<std::pair<int, EdgeSet>> basis;
  std::vector<int> sizes;
  for (CycleCandidate& c : cands) {
    EdgeSet row = c.edges;
    if (!reduce(row, basis)) continue;
    const int pivot = lowest_bit(row);
    // Keep the basis reduced on its pivots.
    for (auto& [p, b] : basis)
      if (b[pivot / 64] >> (pivot % 64) & 1)
        for (std::size_t w = 0; w < words; ++w) b[w] ^= row[w];
    basis.emplace_back(pivot, std::move(row));
    sizes.push_back(c.length);
    if (static_cast<int>(sizes.size()) == rank) break;
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

std::map<int, double> ring_size_ratios(std::span<const MoleculeFragment> molecules) {
  std::map<int, double> out;
  for (int s = 3; s <= 9; ++s) out[s] = 0.0;
  if (molecules.empty()) return out;
  for (const MoleculeFragment& mol : molecules) {
    std::set<int> present;
    for (int s : sssr_ring_sizes(mol)) present.insert(s);
    for (int s : present)
      if (s >= 3 && s <= 9) out[s] += 1.0;
  }
  for (auto& [s, v] : out) v /= static_cast<double>(molecules.size());
  return out;
}

AngleSpec parse_angle_spec(std::string_view pattern) {
  AngleSpec spec;
  spec.text = std::string(pattern);
  std::vector<char> explicit_bond;  // 0 when implicit
  char pending = 0;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    return std::invalid_argument("pattern '" + spec.text + "': " + why);
  };
  while (i < pattern.size()) {
    const char c = pattern[i];
    if (c == '-' || c == '=' || c == '#' || c == ':') {
      if (spec.elements.empty() || pending != 0) throw fail("misplaced bond symbol");
      pending = c;
      ++i;
      continue;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) throw fail("unexpected character");
    std::string sym(1, c);
    if (c == 'C' && i + 1 < pattern.size() && pattern[i + 1] == 'l') sym = "Cl", ++i;
    ++i;
    const bool arom = std::islower(static_cast<unsigned char>(sym[0])) != 0;
    const auto e = try_element_from_symbol(sym);
    if (!e) throw fail("unknown element '" + sym + "'");
    if (!spec.elements.empty()) explicit_bond.push_back(pending);
    pending = 0;
    spec.elements.push_back(*e);
    spec.aromatic.push_back(arom ? 1 : 0);
  }
  if (pending != 0) throw fail("trailing bond symbol");
  if (spec.elements.size() != 3 && spec.elements.size() != 4) throw fail("needs 3 or 4 atoms");
  for (std::size_t b = 0; b < explicit_bond.size(); ++b) {
    BondOrder o;
    switch (explicit_bond[b]) {
      case '-': o = BondOrder::Single; break;
      case '=': o = BondOrder::Double; break;
      case '#': o = BondOrder::Triple; break;
      case ':': o = BondOrder::Aromatic; break;
      default: o = spec.aromatic[b] && spec.aromatic[b + 1] ? BondOrder::Aromatic : BondOrder::Single;
    }
    spec.bonds.push_back(o);
  }
  return spec;
}

std::vector<std::vector<int>> match_pattern(const MoleculeFragment& mol, const AngleSpec& spec) {
  const int n = mol.size();
  std::vector<char> aromatic(n, 0);
  for (const Bond& b : mol.bonds())
    if (b.order == BondOrder::Aromatic) aromatic[b.i] = aromatic[b.j] = 1;
  auto atom_ok = [&](int a, std::size_t k) {
    return mol.atom(a).element == spec.elements[k] && aromatic[a] == spec.aromatic[k];
  };
  std::vector<std::vector<int>> out;
  std::set<std::vector<int>> keys;
  std::vector<int> path;
  const std::size_t len = spec.elements.size();
  auto extend = [&](auto&& self) -> void {
    if (path.size() == len) {
      std::vector<int> rev(path.rbegin(), path.rend());
      if (keys.insert(std::min(path, rev)).second) out.push_back(path);
      return;
    }
    const std::size_t k = path.size();
    for (const auto& [nb, order] : mol.neighbors(path.back())) {
      if (std::find(path.begin(), path.end(), nb) != path.end()) continue;
      if (order != spec.bonds[k - 1] || !atom_ok(nb, k)) continue;
      path.push_back(nb);
      self(self);
      path.pop_back();
    }
  };
  for (int a = 0; a < n; ++a) {
    if (!atom_ok(a, 0)) continue;
    path = {a};
    extend(extend);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double bond_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = a - b, v = c - b;
  const double nu = norm(u), nv = norm(v);
  if (nu == 0 || nv == 0) throw std::invalid_argument("bond_angle: coincident atoms");
  const double cosv = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
  return std::acos(cosv) * 180.0 / std::numbers::pi;
}

double dihedral_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 b1 = b - a, b2 = c - b, b3 = d - c;
  const Vec3 n1 = cross(b1, b2), n2 = cross(b2, b3);
  const double nb2 = norm(b2);
  if (nb2 == 0) throw std::invalid_argument("dihedral_angle: coincident central atoms");
  const Vec3 m1 = cross(n1, (1.0 / nb2) * b2);
  const double x = dot(n1, n2), y = dot(m1, n2);
  return std::atan2(y, x) * 180.0 / std::numbers::pi;
}

std::vector<double> pattern_angles(std::span<const MoleculeFragment> molecules, const AngleSpec& spec) {
  std::vector<double> out;
  for (const MoleculeFragment& mol : molecules)
    for (const auto& p : match_pattern(mol, spec)) {
      const auto& A = mol.atoms();
      out.push_back(spec.dihedral()
                        ? dihedral_angle(A[p[0]].coord, A[p[1]].coord, A[p[2]].coord, A[p[3]].coord)
                        : bond_angle(A[p[0]].coord, A[p[1]].coord, A[p[2]].coord));
    }
  return out;
}

std::vector<double> smoothed_histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("histogram needs bins >= 1 and hi > lo");
  std::vector<double> h(bins, 1.0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    h[std::clamp(b, 0, bins - 1)] += 1.0;
  }
  const double total = static_cast<double>(values.size()) + bins;
  for (double& x : h) x /= total;
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  double kl = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0) || !(q[i] > 0)) throw std::invalid_argument("kl_divergence: non-positive entry");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double angle_histogram_kl(std::span<const MoleculeFragment> reference,
                          std::span<const MoleculeFragment> generated, const AngleSpec& spec, int bins) {
  const std::vector<double> ra = pattern_angles(reference, spec);
  const std::vector<double> ga = pattern_angles(generated, spec);
  if (ra.empty()) throw std::invalid_argument("pattern '" + spec.text + "' has no match in the reference set");
  if (ga.empty()) throw std::invalid_argument("pattern '" + spec.text + "' has no match in the generated set");
  const bool dih = spec.dihedral();
  if (bins <= 0) bins = dih ? kDihedralBins : kAngleBins;
  const double lo = dih ? -180.0 : 0.0;
  return kl_divergence(smoothed_histogram(ra, lo, 180.0, bins), smoothed_histogram(ga, lo, 180.0, bins));
}

std::vector<std::string> default_angle_patterns() {
  return {"CCC", "CCO", "CNC", "OPO", "NCC", "CC=O", "COC",
          "CCCC", "cccc", "CCCO", "OCCO", "Cccc", "CC=CC"};
}

std::string metrics_report_json(std::span<const MetricRecord> records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const MetricRecord& r : records)
    arr.push_back({{"metric", r.metric}, {"pattern", r.pattern}, {"value", r.value}});
  return arr.dump(2) + "\n";
}

}  // namespace pgen
