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

// File-level workflows shared by the C API and the tests.

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pgen/config.hpp"
#include "pgen/model.hpp"
#include "pgen/sampler.hpp"
#include "pgen/trainer.hpp"

namespace pgen {

struct LoadedModel {
  RunConfig config;
  std::unique_ptr<Model<float>> model;
  std::optional<TrainingState> state;  // present when the checkpoint came from training
};

/// Checkpoint bytes with the config echo, Adam state and training progress.
std::string encode_checkpoint(const RunConfig& cfg, const Model<float>& model, const TrainingState* state);
LoadedModel decode_checkpoint(std::string_view bytes);
LoadedModel load_model(const std::string& checkpoint_path);

std::vector<PocketLigandPair> load_pairs(const std::string& manifest_path);

struct TrainRun {
  TrainingState state;
  double initial_validation = 0;
  double final_validation = 0;
};

/// Trains from scratch, or from `resume_checkpoint` when it is non-empty.
/// Writes out_dir/config.json, out_dir/train.log, out_dir/last.ckpt and
/// out_dir/iter_<n>.ckpt at each checkpoint interval.
TrainRun run_training(const std::string& config_path, const std::string& manifest_path,
                      const std::string& out_dir, const std::string& resume_checkpoint,
                      std::ostream* echo);

struct SampleBatch {
  std::vector<MoleculeFragment> molecules;
  std::vector<GenerationTrace> traces;
  std::vector<std::uint64_t> indices;  // molecule_rng index of each kept molecule
  int attempts = 0;
};

/// Non-empty, connected molecules. Valence holds by construction.
bool is_valid_molecule(const MoleculeFragment& mol);

/// Draws molecules 0, 1, ... with molecule_rng(seed, i) until `num` valid
/// ones are found or the attempt budget runs out.
SampleBatch sample_valid(const Model<float>& model, std::span<const Atom> pocket, SamplerConfig cfg, int num,
                         std::uint64_t seed, int max_attempts = 0);

std::string eval_rings_report(std::span<const MoleculeFragment> ref, std::span<const MoleculeFragment> gen);
/// Empty pattern evaluates every default pattern.
std::string eval_angles_report(std::span<const MoleculeFragment> ref, std::span<const MoleculeFragment> gen,
                               const std::string& pattern);

/// Writes pair_<i>.pdb, pair_<i>.sdf and manifest.jsonl into out_dir.
void write_toy_dataset(const std::string& out_dir, int pairs, std::uint64_t seed);

}  // namespace pgen
