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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pgen/metrics.hpp"
#include "pgen/synthetic.hpp"

namespace pgen {
namespace {

using oracle::build;
using oracle::join;
using oracle::ring;

TEST(Rings, Benzene) {
  const std::vector<MoleculeFragment> mols{build("CCCCCC", ring(0, 6), BondOrder::Aromatic)};
  EXPECT_EQ(sssr_ring_sizes(mols[0]), std::vector<int>{6});
  const auto r = ring_size_ratios(mols);
  for (int s = 3; s <= 9; ++s) EXPECT_EQ(r.at(s), s == 6 ? 1.0 : 0.0);
}

TEST(Rings, AcyclicChainHasNone) {
  const std::vector<MoleculeFragment> mols{build("CCCCO", {{0, 1}, {1, 2}, {2, 3}, {3, 4}})};
  EXPECT_TRUE(sssr_ring_sizes(mols[0]).empty());
  for (const auto& [s, v] : ring_size_ratios(mols)) EXPECT_EQ(v, 0.0) << s;
  EXPECT_EQ(ring_size_ratios(std::vector<MoleculeFragment>{}).size(), 7u);
}

TEST(Rings, FusedFiveSix) {
  const MoleculeFragment indane = build("CCCCCCCCC", join(ring(0, 6), {{0, 6}, {6, 7}, {7, 8}, {8, 1}}));
  EXPECT_EQ(oracle::minimum_cycle_basis_sizes(indane), (std::vector<int>{5, 6}));
  EXPECT_EQ(sssr_ring_sizes(indane), (std::vector<int>{5, 6}));
  const auto r = ring_size_ratios(std::vector<MoleculeFragment>{indane});
  EXPECT_EQ(r.at(5), 1.0);
  EXPECT_EQ(r.at(6), 1.0);
  EXPECT_EQ(r.at(9), 0.0);  // the envelope is not a basis ring
}

TEST(Rings, HandBuiltSetMatchesExhaustiveEnumeration) {
  std::vector<MoleculeFragment> all;
  for (const auto& [name, mol] : oracle::ring_fixtures()) {
    EXPECT_EQ(sssr_ring_sizes(mol), oracle::minimum_cycle_basis_sizes(mol)) << name;
    all.push_back(mol);
  }
  EXPECT_EQ(ring_size_ratios(all), oracle::ring_presence(all));
}

TEST(Rings, RandomGraphsMatchExhaustiveEnumeration) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 10));
    MoleculeFragment m = oracle::build(std::string(n, 'C'), {});
    // Random spanning tree plus a few chords, keeping valence.
    for (int i = 1; i < n; ++i) {
      int parent;
      do parent = static_cast<int>(uniform_index(rng, i));
      while (m.free_half_units(parent) < 2);
      m.add_bond(i, parent, BondOrder::Single);
    }
    for (int k = 0; k < 4; ++k) {
      const int a = static_cast<int>(uniform_index(rng, n)), b = static_cast<int>(uniform_index(rng, n));
      if (a != b && m.bond(a, b) == BondOrder::None && m.free_half_units(a) >= 2 && m.free_half_units(b) >= 2)
        m.add_bond(a, b, BondOrder::Single);
    }
    EXPECT_EQ(sssr_ring_sizes(m), oracle::minimum_cycle_basis_sizes(m)) << trial;
  }
}

TEST(Angles, RightAngleAndDihedrals) {
  EXPECT_NEAR(bond_angle({1, 0, 0}, {0, 0, 0}, {0, 1, 0}), 90.0, 1e-12);
  EXPECT_NEAR(bond_angle({1, 0, 0}, {0, 0, 0}, {-2, 0, 0}), 180.0, 1e-12);
  EXPECT_NEAR(bond_angle({1, 0, 0}, {0, 0, 0}, {3, 0, 0}), 0.0, 1e-12);
  EXPECT_THROW(bond_angle({0, 0, 0}, {0, 0, 0}, {1, 0, 0}), std::invalid_argument);
  EXPECT_NEAR(dihedral_angle({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, {1, 0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(dihedral_angle({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, {-1, 0, 1})), 180.0, 1e-12);
  const double d = dihedral_angle({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, {0, 1, 1});
  EXPECT_NEAR(std::abs(d), 90.0, 1e-12);
  EXPECT_NEAR(dihedral_angle({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, {0, -1, 1}), -d, 1e-12);
}

TEST(Angles, PatternParsing) {
  const AngleSpec s = parse_angle_spec("CC=O");
  EXPECT_EQ(s.elements, (std::vector<Element>{Element::C, Element::C, Element::O}));
  EXPECT_EQ(s.bonds, (std::vector<BondOrder>{BondOrder::Single, BondOrder::Double}));
  EXPECT_FALSE(s.dihedral());
  const AngleSpec a = parse_angle_spec("cccc");
  EXPECT_TRUE(a.dihedral());
  EXPECT_EQ(a.bonds, std::vector<BondOrder>(3, BondOrder::Aromatic));
  EXPECT_EQ(parse_angle_spec("ClCC").elements[0], Element::Cl);
  for (const char* bad : {"CC", "CCCCC", "C=", "=CC", "CXC", "C1C", "C==CC"})
    EXPECT_THROW(parse_angle_spec(bad), std::invalid_argument) << bad;
  for (const std::string& p : default_angle_patterns()) EXPECT_NO_THROW(parse_angle_spec(p)) << p;
}

TEST(Angles, MatchesCountPathsOnce) {
  const MoleculeFragment propanol = build("CCCO", {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(match_pattern(propanol, parse_angle_spec("CCC")).size(), 1u);
  EXPECT_EQ(match_pattern(propanol, parse_angle_spec("CCO")).size(), 1u);
  EXPECT_EQ(match_pattern(propanol, parse_angle_spec("CCCO")).size(), 1u);
  EXPECT_TRUE(match_pattern(propanol, parse_angle_spec("CC=O")).empty());
  const MoleculeFragment benzene = build("CCCCCC", ring(0, 6), BondOrder::Aromatic);
  EXPECT_EQ(match_pattern(benzene, parse_angle_spec("ccc")).size(), 6u);
  EXPECT_TRUE(match_pattern(benzene, parse_angle_spec("CCC")).empty());
}

TEST(Kl, IdenticalSetsAreZero) {
  Rng rng(9);
  std::vector<MoleculeFragment> mols;
  for (int i = 0; i < 5; ++i) mols.push_back(random_ligand(rng, 12));
  const AngleSpec s = parse_angle_spec("CCC");
  EXPECT_EQ(angle_histogram_kl(mols, mols, s), 0.0);
}

// Three-atom chains C-C-C with the angle at the middle atom set directly.
MoleculeFragment angle_molecule(double degrees) {
  MoleculeFragment m;
  const double r = degrees * M_PI / 180.0;
  m.add_atom(Element::C, {1.5, 0, 0});
  m.add_atom(Element::C, {0, 0, 0});
  m.add_atom(Element::C, {1.5 * std::cos(r), 1.5 * std::sin(r), 0});
  m.add_bond(0, 1, BondOrder::Single);
  m.add_bond(1, 2, BondOrder::Single);
  return m;
}

TEST(Kl, ManualHistogram) {
  const double ref_deg[] = {104.5, 109.5, 109.5, 111.0, 112.3, 115.0, 118.0, 120.0, 120.5, 179.9};
  const double gen_deg[] = {90.0, 100.2, 108.0, 109.0, 119.0, 121.0, 125.0, 130.5, 150.0, 5.0};
  std::vector<MoleculeFragment> ref, gen;
  std::vector<double> ra, ga;
  for (double d : ref_deg) ref.push_back(angle_molecule(d)), ra.push_back(d);
  for (double d : gen_deg) gen.push_back(angle_molecule(d)), ga.push_back(d);
  const AngleSpec s = parse_angle_spec("CCC");
  const double kl = angle_histogram_kl(ref, gen, s);
  EXPECT_NEAR(kl, oracle::histogram_kl(ra, ga, 0, 180, kAngleBins), 1e-9);
  EXPECT_GT(kl, 0.0);
  // Independent of input order.
  std::reverse(gen.begin(), gen.end());
  EXPECT_NEAR(angle_histogram_kl(ref, gen, s), kl, 1e-15);
}

TEST(Kl, NonNegativeAndInvariant) {
  Rng rng(10);
  const AngleSpec s = parse_angle_spec("CCC");
  const AngleSpec d = parse_angle_spec("CCCC");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MoleculeFragment> a, b;
    for (int i = 0; i < 4; ++i) a.push_back(random_ligand(rng, 12)), b.push_back(random_ligand(rng, 12));
    double kl;
    try {
      kl = angle_histogram_kl(a, b, s);
    } catch (const std::invalid_argument&) {
      continue;
    }
    EXPECT_GE(kl, 0.0);
    // A rigid motion of the generated set leaves every angle, and so the KL, unchanged.
    const auto m = random_orthogonal(rng, false);
    std::vector<MoleculeFragment> moved;
    for (const MoleculeFragment& mol : b) {
      MoleculeFragment t;
      for (const Atom& at : mol.atoms()) t.add_atom(at.element, pgen::apply(m, at.coord) + Vec3{3, -2, 7});
      for (const Bond& bd : mol.bonds()) t.add_bond(bd.i, bd.j, bd.order);
      moved.push_back(t);
    }
    EXPECT_NEAR(angle_histogram_kl(a, moved, s), kl, 1e-9);
    try {
      const double kd = angle_histogram_kl(a, b, d);
      EXPECT_GE(kd, 0.0);
    } catch (const std::invalid_argument&) {
    }
  }
}

TEST(Kl, MissingPatternFaultsWithItsName) {
  const std::vector<MoleculeFragment> mols{build("CCC", {{0, 1}, {1, 2}})};
  try {
    angle_histogram_kl(mols, mols, parse_angle_spec("OPO"));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("OPO"), std::string::npos);
  }
  const std::vector<double> p{0.5, 0.5}, q{1.0, 0.0}, r{1.0};
  EXPECT_THROW(kl_divergence(p, q), std::invalid_argument);
  EXPECT_THROW(kl_divergence(p, r), std::invalid_argument);
  EXPECT_THROW(smoothed_histogram(p, 1, 0, 4), std::invalid_argument);
}

TEST(Report, JsonRecords) {
  const std::vector<MetricRecord> recs{{"ring_ratio", "6", 1.0}, {"angle_kl", "CCC", 0.25}};
  const std::string j = metrics_report_json(recs);
  EXPECT_NE(j.find("\"metric\": \"ring_ratio\""), std::string::npos);
  EXPECT_NE(j.find("\"pattern\": \"CCC\""), std::string::npos);
  EXPECT_NE(j.find("0.25"), std::string::npos);
}

}  // namespace
}  // namespace pgen
