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
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pgen/diffcore.hpp"
#include "pgen/molgraph.hpp"

namespace pgen {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ATOM/HETATM records of a pocket. Hydrogens, waters and alternate
/// locations other than blank or 'A' are skipped.
std::vector<Atom> parse_pocket_pdb(std::string_view text);
std::string write_pocket_pdb(std::span<const Atom> atoms);

std::string write_sdf(std::span<const MoleculeFragment> molecules);
std::vector<MoleculeFragment> read_sdf(std::string_view text);

/// Checkpoint container: 8-byte magic, little-endian uint64 manifest
/// length, JSON manifest, then float32 little-endian payload entries in
/// manifest order.
inline constexpr std::string_view kCheckpointMagic = "PGENCKP1";

struct CheckpointEntry {
  std::string name;
  Array<float> value;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;
  std::string meta_json = "{}";  // free-form JSON object echoed into the manifest
};

std::string save_checkpoint(const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::string_view bytes);

/// Store values, plus Adam moments under "adam.m/" and "adam.v/" prefixes
/// when `with_optimizer` is set.
Checkpoint checkpoint_from_store(const ParamStore<float>& store, bool with_optimizer);
/// Fills an existing store (built from the same config) from a checkpoint.
void restore_store(ParamStore<float>& store, const Checkpoint& ckpt);

struct ManifestEntry {
  std::string pocket_path;
  std::string ligand_path;
};

/// JSON-lines of {"pocket_path", "ligand_path"}; relative paths resolve
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);

}  // namespace pgen
