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

// pgen command-line front end. Everything goes through the C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "pgen/pgen.h"

namespace {

int report_error(pgen_status s) {
  std::fprintf(stderr, "pgen: error: %s\n", pgen_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pocket-conditioned 3D molecule generation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pgen_version());

  std::string config, data, out_dir, resume;
  CLI::App* train = app.add_subcommand("train", "Train a model on a pocket-ligand manifest");
  train->add_option("--config", config, "JSON run config (architecture, trainer, sampler)")->required()
      ->check(CLI::ExistingFile);
  train->add_option("--data", data, "JSON-lines manifest of {pocket_path, ligand_path}")->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "Output directory for checkpoints and train.log")->required();
  train->add_option("--resume", resume, "Checkpoint to continue from (same config)")->check(CLI::ExistingFile);
  bool quiet = false;
  train->add_flag("--quiet", quiet, "Write the training log to train.log only");

  std::string checkpoint, pocket, out_sdf;
  int num = 0;
  std::uint64_t seed = 0;
  CLI::App* sample = app.add_subcommand("sample", "Generate molecules for a pocket");
  sample->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  sample->add_option("--pocket", pocket, "Pocket PDB file")->required()->check(CLI::ExistingFile);
  sample->add_option("--num", num, "Number of valid molecules to write")->required()->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "Random seed")->required();
  sample->add_option("--out", out_sdf, "Output SDF")->required();

  std::string kind, ref, gen, pattern, out_json;
  CLI::App* eval = app.add_subcommand("eval", "Ring-size and angle statistics of generated molecules");
  eval->add_option("kind", kind, "rings or angles")->required()->check(CLI::IsMember({"rings", "angles"}));
  eval->add_option("--ref", ref, "Reference SDF")->required()->check(CLI::ExistingFile);
  eval->add_option("--gen", gen, "Generated SDF")->required()->check(CLI::ExistingFile);
  eval->add_option("--pattern", pattern, "Angle pattern such as CCC or CC=O (angles only; default: all)");
  eval->add_option("--out", out_json, "Output JSON report")->required();

  std::string suite;
  int trials = 0;
  std::uint64_t check_seed = 0;
  CLI::App* check = app.add_subcommand("check", "Run a numerical property suite");
  check->add_option("suite", suite, "equivariance, attention, gradients or gmm")->required()
      ->check(CLI::IsMember({"equivariance", "attention", "gradients", "gmm"}));
  check->add_option("--trials", trials, "Number of random trials (0 or absent: suite default)")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--seed", check_seed, "Random seed");

  std::string toy_out;
  int pairs = 5;
  std::uint64_t toy_seed = 0;
  CLI::App* toy = app.add_subcommand("toy-data", "Write a synthetic pocket-ligand dataset");
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy->add_option("--pairs", pairs, "Number of pairs")->check(CLI::PositiveNumber);
  toy->add_option("--seed", toy_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "pgen: error: %s\n", e.what());
    return 2;
  }

  if (*train) {
    const pgen_status s = pgen_train(config.c_str(), data.c_str(), out_dir.c_str(),
                                     resume.empty() ? nullptr : resume.c_str(), quiet ? 0 : 1);
    return s == PGEN_OK ? 0 : report_error(s);
  }
  if (*sample) {
    pgen_model* model = nullptr;
    pgen_status s = pgen_model_load(checkpoint.c_str(), &model);
    if (s != PGEN_OK) return report_error(s);
    int produced = 0;
    s = pgen_sample(model, pocket.c_str(), num, seed, out_sdf.c_str(), &produced);
    pgen_model_free(model);
    if (s != PGEN_OK) return report_error(s);
    std::printf("wrote %d molecules to %s\n", produced, out_sdf.c_str());
    return 0;
  }
  if (*eval) {
    const pgen_status s = pgen_eval(kind.c_str(), ref.c_str(), gen.c_str(),
                                    pattern.empty() ? nullptr : pattern.c_str(), out_json.c_str());
    return s == PGEN_OK ? 0 : report_error(s);
  }
  if (*check) {
    char* report = nullptr;
    const pgen_status s = pgen_check(suite.c_str(), trials, check_seed, &report);
    if (report) {
      std::fputs(report, stdout);
      pgen_string_free(report);
    }
    return s == PGEN_OK ? 0 : report_error(s);
  }
  if (*toy) {
    const pgen_status s = pgen_toy_data(toy_out.c_str(), pairs, toy_seed);
    return s == PGEN_OK ? 0 : report_error(s);
  }
  return 0;
}
