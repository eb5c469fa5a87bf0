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

#include "pgen/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pgen/chemio.hpp"
#include "pgen/metrics.hpp"
#include "pgen/synthetic.hpp"

namespace pgen {

namespace {

using json = nlohmann::ordered_json;

json state_json(const TrainingState& s) {
  return {{"iteration", s.iteration},
          {"lr", s.schedule.lr},
          {"best", s.schedule.best},
          {"has_best", s.schedule.has_best},
          {"bad", s.schedule.bad},
          {"decays", s.schedule.decays},
          {"rng_state", s.rng_state},
          {"initial_loss", s.initial_loss},
          {"has_initial_loss", s.has_initial_loss},
          {"validation_history", s.validation_history}};
}

TrainingState state_from_json(const json& j) {
  TrainingState s;
  s.iteration = j.at("iteration").get<long>();
  s.schedule.lr = j.at("lr").get<double>();
  s.schedule.best = j.at("best").get<double>();
  s.schedule.has_best = j.at("has_best").get<bool>();
  s.schedule.bad = j.at("bad").get<int>();
  s.schedule.decays = j.at("decays").get<int>();
  s.rng_state = j.at("rng_state").get<std::string>();
  s.initial_loss = j.at("initial_loss").get<double>();
  s.has_initial_loss = j.at("has_initial_loss").get<bool>();
  s.validation_history = j.at("validation_history").get<std::vector<double>>();
  return s;
}

MoleculeFragment first_molecule(const std::string& path) {
  std::vector<MoleculeFragment> mols = read_sdf(read_file(path));
  if (mols.empty()) throw FormatError(path + ": no molecule");
  return mols.front();
}

}  // namespace

std::string encode_checkpoint(const RunConfig& cfg, const Model<float>& model, const TrainingState* state) {
  Checkpoint ck = checkpoint_from_store(model.store(), true);
  json meta;
  meta["config"] = json::parse(run_config_json(cfg));
  meta["adam_step"] = model.store().step;
  meta["parameters"] = model.store().parameter_count();
  if (state) meta["training"] = state_json(*state);
  ck.meta_json = meta.dump();
  return save_checkpoint(ck);
}

LoadedModel decode_checkpoint(std::string_view bytes) {
  Checkpoint ck = load_checkpoint(bytes);
  json meta = json::parse(ck.meta_json);
  if (!meta.contains("config")) throw FormatError("checkpoint has no config echo");
  LoadedModel out;
  out.config = parse_run_config(meta["config"].dump());
  out.model = std::make_unique<Model<float>>(out.config.model, out.config.seed);
  try {
    restore_store(out.model->store(), ck);
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint does not match its config: ") + e.what());
  }
  out.model->store().step = meta.value("adam_step", 0L);
  if (meta.contains("training")) {
    try {
      out.state = state_from_json(meta["training"]);
    } catch (const json::exception& e) {
      throw FormatError(std::string("checkpoint training state is malformed: ") + e.what());
    }
  }
  return out;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  try {
    return decode_checkpoint(read_file(checkpoint_path));
  } catch (const FormatError& e) {
    throw FormatError(checkpoint_path + ": " + e.what());
  }
}

std::vector<PocketLigandPair> load_pairs(const std::string& manifest_path) {
  std::vector<PocketLigandPair> pairs;
  for (const ManifestEntry& e : read_manifest(manifest_path)) {
    PocketLigandPair p;
    try {
      p.pocket = parse_pocket_pdb(read_file(e.pocket_path));
    } catch (const FormatError& err) {
      throw FormatError(e.pocket_path + ": " + err.what());
    }
    p.ligand = first_molecule(e.ligand_path);
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw FormatError(manifest_path + ": manifest lists no pairs");
  return pairs;
}

TrainRun run_training(const std::string& config_path, const std::string& manifest_path,
                      const std::string& out_dir, const std::string& resume_checkpoint, std::ostream* echo) {
  RunConfig cfg = parse_run_config(read_file(config_path));
  const std::vector<PocketLigandPair> pairs = load_pairs(manifest_path);
  std::vector<PocketLigandPair> val;
  if (!cfg.validation_manifest.empty()) {
    std::filesystem::path vp(cfg.validation_manifest);
    if (vp.is_relative()) vp = std::filesystem::path(config_path).parent_path() / vp;
    val = load_pairs(vp.string());
  }

  std::unique_ptr<Model<float>> model;
  std::optional<TrainingState> resume;
  if (!resume_checkpoint.empty()) {
    LoadedModel lm = load_model(resume_checkpoint);
    if (run_config_json(lm.config) != run_config_json(cfg))
      throw FormatError(resume_checkpoint + ": checkpoint config differs from " + config_path);
    model = std::move(lm.model);
    resume = lm.state;
  } else {
    model = std::make_unique<Model<float>>(cfg.model, cfg.seed);
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file((dir / "config.json").string(), run_config_json(cfg) + "\n");

  std::ofstream logfile(dir / "train.log", resume ? std::ios::app : std::ios::trunc);
  if (!logfile) throw std::runtime_error("cannot open " + (dir / "train.log").string());
  struct Tee : std::streambuf {
    std::streambuf *a, *b;
    int overflow(int c) override {
      if (c == EOF) return !EOF;
      if (a) a->sputc(static_cast<char>(c));
      b->sputc(static_cast<char>(c));
      return c;
    }
    int sync() override {
      if (a) a->pubsync();
      return b->pubsync();
    }
  } tee;
  tee.a = echo ? echo->rdbuf() : nullptr;
  tee.b = logfile.rdbuf();
  std::ostream log(&tee);

  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint = [&](const Model<float>& m, const TrainingState& st) {
    const std::string bytes = encode_checkpoint(cfg, m, &st);
    if (st.iteration < cfg.trainer.iterations)
      write_file((dir / ("iter_" + std::to_string(st.iteration) + ".ckpt")).string(), bytes);
    write_file((dir / "last.ckpt").string(), bytes);
  };
  TrainRun run;
  run.initial_validation = validation_loss(*model, val.empty() ? pairs : val, cfg.trainer);
  run.state = train(*model, pairs, val, cfg.trainer, hooks, resume);
  run.final_validation = validation_loss(*model, val.empty() ? pairs : val, cfg.trainer);
  log << "final validation " << run.final_validation << " initial " << run.initial_validation << '\n';
  log.flush();
  return run;
}

bool is_valid_molecule(const MoleculeFragment& mol) { return !mol.empty() && mol.connected(); }

SampleBatch sample_valid(const Model<float>& model, std::span<const Atom> pocket, SamplerConfig cfg, int num,
                         std::uint64_t seed, int max_attempts) {
  if (num < 0) throw std::invalid_argument("molecule count must be non-negative");
  if (max_attempts <= 0) max_attempts = 4 * num + 16;
  cfg.seed = seed;
  SampleBatch out;
  for (std::uint64_t i = 0; static_cast<int>(out.molecules.size()) < num && out.attempts < max_attempts; ++i) {
    ++out.attempts;
    Rng rng = molecule_rng(seed, i);
    SampleResult r = sample_molecule(model, pocket, cfg, rng);
    if (!is_valid_molecule(r.molecule)) continue;
    out.molecules.push_back(std::move(r.molecule));
    out.traces.push_back(std::move(r.trace));
    out.indices.push_back(i);
  }
  return out;
}

std::string eval_rings_report(std::span<const MoleculeFragment> ref, std::span<const MoleculeFragment> gen) {
  std::vector<MetricRecord> recs;
  for (const auto& [size, frac] : ring_size_ratios(gen))
    recs.push_back({"ring_ratio", std::to_string(size), frac});
  for (const auto& [size, frac] : ring_size_ratios(ref))
    recs.push_back({"ring_ratio_reference", std::to_string(size), frac});
  return metrics_report_json(recs);
}

std::string eval_angles_report(std::span<const MoleculeFragment> ref, std::span<const MoleculeFragment> gen,
                               const std::string& pattern) {
  std::vector<MetricRecord> recs;
  if (!pattern.empty()) {
    const AngleSpec spec = parse_angle_spec(pattern);
    recs.push_back({spec.dihedral() ? "dihedral_kl" : "angle_kl", pattern, angle_histogram_kl(ref, gen, spec)});
    return metrics_report_json(recs);
  }
  for (const std::string& p : default_angle_patterns()) {
    const AngleSpec spec = parse_angle_spec(p);
    // Patterns absent from either set have no defined divergence.
    if (pattern_angles(ref, spec).empty() || pattern_angles(gen, spec).empty()) continue;
    recs.push_back({spec.dihedral() ? "dihedral_kl" : "angle_kl", p, angle_histogram_kl(ref, gen, spec)});
  }
  return metrics_report_json(recs);
}

void write_toy_dataset(const std::string& out_dir, int pairs, std::uint64_t seed) {
  if (pairs <= 0) throw std::invalid_argument("toy dataset needs at least one pair");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::string manifest;
  const std::vector<PocketLigandPair> data = make_toy_dataset(pairs, seed);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string stem = "pair_" + std::to_string(i);
    write_file((dir / (stem + ".pdb")).string(), write_pocket_pdb(data[i].pocket));
    write_file((dir / (stem + ".sdf")).string(), write_sdf(std::span<const MoleculeFragment>(&data[i].ligand, 1)));
    manifest += json{{"pocket_path", stem + ".pdb"}, {"ligand_path", stem + ".sdf"}}.dump() + "\n";
  }
  write_file((dir / "manifest.jsonl").string(), manifest);
}

}  // namespace pgen
