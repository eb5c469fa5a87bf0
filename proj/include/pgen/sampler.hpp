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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pgen/model.hpp"
#include "pgen/molgraph.hpp"
#include "pgen/random.hpp"

namespace pgen {

struct SamplerConfig {
  double threshold = 0.5;
  int max_atoms = 60;
  int retries = 10;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Termination { NoFrontier, FrontierExhausted, MaxAtoms };
std::string_view termination_name(Termination t);

struct PlacementRecord {
  bool focal_in_pocket = false;
  int focal = -1;  // pocket index or fragment index
  Vec3 delta{0, 0, 0};
  Element element = Element::C;
  std::vector<std::pair<int, BondOrder>> bonds;  // fragment partner, order
  double focal_probability = 0;
  double element_probability = 0;
  std::vector<double> bond_probabilities;  // one per bond, same order
  int attempts = 1;  // placements tried at this focal atom, this one included
};

struct GenerationTrace {
  std::vector<PlacementRecord> placements;
  Termination reason = Termination::NoFrontier;
};

/// Rebuilds the molecule from a trace: each atom lands at focal + delta.
MoleculeFragment replay(std::span<const Atom> pocket, const GenerationTrace& trace);

/// Candidates are atoms with p >= threshold; one is drawn proportionally to p.
std::optional<int> select_focal(std::span<const double> probabilities, const SamplerConfig& cfg, Rng& rng);

struct Placement {
  Element element = Element::C;
  std::vector<std::pair<int, BondOrder>> bonds;
  double element_probability = 0;
  std::vector<double> bond_probabilities;
};

enum class Rejection { Nothing, NoValidBonds };

struct PlacementResult {
  std::optional<Placement> placement;
  Rejection rejection = Rejection::Nothing;  // meaningful when placement is empty
};

/// Samples an element and per-partner bond classes, enforcing valence.
/// bond_logits holds one row of kNumBondClasses logits per fragment atom.
PlacementResult place_atom(const MoleculeFragment& fragment, std::span<const double> element_logits,
                           const Array<double>& bond_logits, const SamplerConfig& cfg, Rng& rng);

/// Valence-masked greedy assignment used when random draws keep failing.
std::optional<std::vector<BondOrder>> greedy_bonds(const MoleculeFragment& fragment, Element element,
                                                   const Array<double>& bond_probabilities);

struct SampleResult {
  MoleculeFragment molecule;
  GenerationTrace trace;
};

SampleResult sample_molecule(const Model<float>& model, std::span<const Atom> pocket,
                             const SamplerConfig& cfg, Rng& rng);

/// Rng for molecule `index` of a run seeded with `seed`.
Rng molecule_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace pgen
