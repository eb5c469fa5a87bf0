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
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgen/model.hpp"
#include "pgen/molgraph.hpp"
#include "pgen/random.hpp"

namespace pgen {

struct PocketLigandPair {
  std::vector<Atom> pocket;
  MoleculeFragment ligand;
};

/// One masked atom to recover.
struct TrainingTarget {
  int ligand_index = -1;  // index in the full ligand
  int focal = -1;         // context node index the offset is measured from
  Vec3 delta{0, 0, 0};    // true position - focal position
  Vec3 query{0, 0, 0};    // element query offset from the true position
  Element element = Element::C;
  std::vector<BondOrder> bonds;  // one per visible atom, None when unbonded
};

struct TrainingExample {
  const std::vector<Atom>* pocket = nullptr;
  MoleculeFragment visible;
  std::vector<int> visible_index;  // ligand index of each visible atom
  std::vector<int> masked_index;
  // Frontier supervision: context node indices and their labels. Fragment
  // atoms when any are visible, pocket atoms otherwise.
  std::vector<int> frontier_nodes;
  std::vector<char> frontier_labels;
  std::vector<TrainingTarget> targets;
  std::vector<Vec3> negatives;  // raw coordinates labelled Nothing

  bool fully_masked() const { return visible.empty(); }
};

struct MaskingConfig {
  double first_atom_radius = 4.0;
  double negative_inner = 3.0;
  double negative_outer = 6.0;
  double negative_clearance = 1.0;
  int negative_attempts = 64;
  // Per-axis sd of a Gaussian offset applied to positive element/bond
  // queries; 0 queries exactly at the true atom positions.
  double query_jitter = 0.0;
};

/// Masks ceil(U * n) ligand atoms (at least one) and builds the supervision.
TrainingExample make_training_example(const std::vector<Atom>& pocket, const MoleculeFragment& ligand,
                                      Rng& rng, const MaskingConfig& cfg = {});

template <class T>
struct Losses {
  Var<T> frontier, position, element, bond, total;

  double value(const Var<T>& v) const { return static_cast<double>(v.value().data[0]); }
};

/// The four losses on a tape; bond loss is zero when no visible atoms exist.
template <class T>
Losses<T> compute_losses(const Model<T>& model, const Ctx<T>& ctx, const TrainingExample& ex,
                         T clip = T(1e-7));

struct TrainerConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 8.0;  // 0 disables clipping
  int batch = 8;
  double decay = 0.6;
  int patience = 8;
  int validation_interval = 200;
  int iterations = 20000;
  int checkpoint_interval = 1000;  // 0 disables periodic checkpoints
  int log_interval = 50;
  int validation_examples = 8;  // fixed-seed masks per pair
  std::uint64_t seed = 0;
  MaskingConfig masking;

  void validate() const;
};

/// Plateau schedule: `patience` consecutive validations without improvement
/// multiply the learning rate by `decay` and restart the count.
struct PlateauSchedule {
  double lr = 2e-4;
  double best = 0;
  bool has_best = false;
  int bad = 0;
  int decays = 0;

  /// Returns true when this observation decayed the rate.
  bool observe(double validation_loss, double decay, int patience);
};

/// Everything needed to continue training bit-exactly.
struct TrainingState {
  long iteration = 0;
  PlateauSchedule schedule;
  std::string rng_state;  // textual mt19937_64 state
  double initial_loss = 0;
  bool has_initial_loss = false;
  std::vector<double> validation_history;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(long iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) { }
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

struct TrainHooks {
  std::ostream* log = nullptr;
  /// Called at each checkpoint interval and at the end of training.
  std::function<void(const Model<float>&, const TrainingState&)> checkpoint;
};

/// Mean total loss over fixed-seed validation examples (no tape recording).
double validation_loss(const Model<float>& model, const std::vector<PocketLigandPair>& pairs,
                       const TrainerConfig& cfg);

/// Runs Adam over freshly masked examples until cfg.iterations.
TrainingState train(Model<float>& model, const std::vector<PocketLigandPair>& train_pairs,
                    const std::vector<PocketLigandPair>& validation_pairs, const TrainerConfig& cfg,
                    const TrainHooks& hooks = {}, std::optional<TrainingState> resume = std::nullopt);

}  // namespace pgen
