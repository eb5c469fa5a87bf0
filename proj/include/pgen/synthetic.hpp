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
#include <vector>

#include "pgen/molgraph.hpp"
#include "pgen/random.hpp"
#include "pgen/trainer.hpp"

namespace pgen {

struct ToyConfig {
  int min_ligand_atoms = 8;
  int max_ligand_atoms = 15;
  int pocket_atoms = 32;
  double bond_length = 1.5;
  double min_nonbonded = 2.4;   // between ligand atoms that are not bonded
  double pocket_inner = 3.2;    // pocket atom to nearest ligand atom
  double pocket_outer = 5.5;
  double pocket_spacing = 2.8;  // between pocket atoms
};

/// Tree-shaped ligand of C/N/O with single and double bonds, valence-valid,
/// with no two non-bonded atoms closer than cfg.min_nonbonded.
MoleculeFragment random_ligand(Rng& rng, int atoms, const ToyConfig& cfg = {});

/// Shell of pocket atoms around a ligand.
std::vector<Atom> random_pocket_around(const MoleculeFragment& ligand, Rng& rng, const ToyConfig& cfg = {});

std::vector<PocketLigandPair> make_toy_dataset(int pairs, std::uint64_t seed, const ToyConfig& cfg = {});

/// Random rotation or reflection (det = -1 when `reflect`).
std::array<Vec3, 3> random_orthogonal(Rng& rng, bool reflect);
Vec3 apply(const std::array<Vec3, 3>& m, const Vec3& v);

}  // namespace pgen
