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

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgen/molgraph.hpp"

namespace pgen {

/// Ring sizes of a minimum cycle basis (smallest set of smallest rings),
/// sorted ascending. Each ring is listed once.
std::vector<int> sssr_ring_sizes(const MoleculeFragment& mol);

/// Fraction of molecules containing at least one ring of each size 3..9.
std::map<int, double> ring_size_ratios(std::span<const MoleculeFragment> molecules);

/// Angle / dihedral pattern: 3 or 4 atoms, uppercase aliphatic, lowercase
/// aromatic, with optional bond symbols - = # : between them.
struct AngleSpec {
  std::string text;
  std::vector<Element> elements;
  std::vector<char> aromatic;
  std::vector<BondOrder> bonds;  // size elements - 1

  bool dihedral() const { return elements.size() == 4; }
};

AngleSpec parse_angle_spec(std::string_view pattern);

/// Atom index paths matching the pattern; a path and its reverse count once.
std::vector<std::vector<int>> match_pattern(const MoleculeFragment& mol, const AngleSpec& spec);

/// Bond angle at b in degrees, [0, 180].
double bond_angle(const Vec3& a, const Vec3& b, const Vec3& c);
/// Signed dihedral in degrees, [-180, 180].
double dihedral_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Angles for every match of the pattern across the molecules.
std::vector<double> pattern_angles(std::span<const MoleculeFragment> molecules, const AngleSpec& spec);

/// Add-one-smoothed histogram over [lo, hi], normalized to sum 1.
std::vector<double> smoothed_histogram(std::span<const double> values, double lo, double hi, int bins);
/// KL(p || q) for strictly positive distributions of equal length.
double kl_divergence(std::span<const double> p, std::span<const double> q);

inline constexpr int kAngleBins = 36;
inline constexpr int kDihedralBins = 72;

/// KL(reference || generated) of the pattern's angle histograms. bins <= 0
/// selects the default for the pattern length.
double angle_histogram_kl(std::span<const MoleculeFragment> reference,
                          std::span<const MoleculeFragment> generated, const AngleSpec& spec, int bins = 0);

/// Bond-angle and dihedral patterns evaluated when none is given.
std::vector<std::string> default_angle_patterns();

struct MetricRecord {
  std::string metric;
  std::string pattern;
  double value = 0;
};

std::string metrics_report_json(std::span<const MetricRecord> records);

}  // namespace pgen
