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

#include "pgen/pgen.h"

#include <cstring>
#include <iostream>
#include <string>

#include "pgen/checks.hpp"
#include "pgen/chemio.hpp"
#include "pgen/pipeline.hpp"

struct pgen_model {
  pgen::LoadedModel loaded;
};

namespace {

thread_local std::string g_last_error;

pgen_status fail(pgen_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
pgen_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const pgen::ConfigError& e) {
    return fail(PGEN_ERR_CONFIG, e.what());
  } catch (const pgen::FormatError& e) {
    return fail(PGEN_ERR_FORMAT, e.what());
  } catch (const pgen::IoError& e) {
    return fail(PGEN_ERR_IO, e.what());
  } catch (const pgen::TrainingError& e) {
    return fail(PGEN_ERR_NUMERIC, e.what());
  } catch (const pgen::NumericFault& e) {
    return fail(PGEN_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PGEN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PGEN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PGEN_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<pgen::MoleculeFragment> read_molecules(const char* path) {
  try {
    return pgen::read_sdf(pgen::read_file(path));
  } catch (const pgen::FormatError& e) {
    throw pgen::FormatError(std::string(path) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* pgen_last_error(void) { return g_last_error.c_str(); }

const char* pgen_version(void) { return "0.1.0"; }

void pgen_string_free(char* s) { delete[] s; }

pgen_status pgen_model_load(const char* checkpoint_path, pgen_model** out) {
  if (!checkpoint_path || !out) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<pgen_model>();
    m->loaded = pgen::load_model(checkpoint_path);
    *out = m.release();
    return PGEN_OK;
  });
}

void pgen_model_free(pgen_model* model) { delete model; }

pgen_status pgen_model_parameter_count(const pgen_model* model, size_t* out) {
  if (!model || !out) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  *out = model->loaded.model->store().parameter_count();
  g_last_error.clear();
  return PGEN_OK;
}

pgen_status pgen_model_config_json(const pgen_model* model, char** out) {
  if (!model || !out) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = copy_string(pgen::run_config_json(model->loaded.config));
    return PGEN_OK;
  });
}

pgen_status pgen_train(const char* config_path, const char* manifest_path, const char* out_dir,
                       const char* resume_checkpoint, int echo_log) {
  if (!config_path || !manifest_path || !out_dir) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    pgen::run_training(config_path, manifest_path, out_dir, resume_checkpoint ? resume_checkpoint : "",
                       echo_log ? &std::cout : nullptr);
    return PGEN_OK;
  });
}

pgen_status pgen_sample(const pgen_model* model, const char* pocket_pdb, int num, uint64_t seed,
                        const char* out_sdf, int* produced) {
  if (produced) *produced = 0;
  if (!model || !pocket_pdb || !out_sdf) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  if (num <= 0) return fail(PGEN_ERR_INVALID_ARGUMENT, "--num must be positive");
  return guarded([&] {
    std::vector<pgen::Atom> pocket;
    try {
      pocket = pgen::parse_pocket_pdb(pgen::read_file(pocket_pdb));
    } catch (const pgen::FormatError& e) {
      throw pgen::FormatError(std::string(pocket_pdb) + ": " + e.what());
    }
    const pgen::SampleBatch batch =
        pgen::sample_valid(*model->loaded.model, pocket, model->loaded.config.sampler, num, seed);
    const int got = static_cast<int>(batch.molecules.size());
    if (produced) *produced = got;
    if (got < num)
      return fail(PGEN_ERR_INCOMPLETE, "only " + std::to_string(got) + " of " + std::to_string(num)
                                           + " molecules were valid after " + std::to_string(batch.attempts)
                                           + " attempts");
    pgen::write_file(out_sdf, pgen::write_sdf(batch.molecules));
    return PGEN_OK;
  });
}

pgen_status pgen_eval(const char* kind, const char* ref_sdf, const char* gen_sdf, const char* pattern,
                      const char* out_json) {
  if (!kind || !ref_sdf || !gen_sdf || !out_json) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string k(kind);
    if (k != "rings" && k != "angles") return fail(PGEN_ERR_INVALID_ARGUMENT, "unknown eval kind '" + k + "'");
    const auto ref = read_molecules(ref_sdf);
    const auto gen = read_molecules(gen_sdf);
    const std::string report = k == "rings" ? pgen::eval_rings_report(ref, gen)
                                            : pgen::eval_angles_report(ref, gen, pattern ? pattern : "");
    pgen::write_file(out_json, report);
    return PGEN_OK;
  });
}

pgen_status pgen_check(const char* suite, int trials, uint64_t seed, char** report) {
  if (!suite || !report) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  *report = nullptr;
  return guarded([&] {
    const std::string s(suite);
    pgen::SuiteReport r;
    if (s == "equivariance") {
      r = pgen::equivariance_suite(trials > 0 ? trials : 100, seed);
    } else if (s == "attention") {
      r = pgen::attention_suite(trials > 0 ? trials : 1000, seed);
    } else if (s == "gradients") {
      r = pgen::gradient_suite(trials > 0 ? trials : 20, seed);
    } else if (s == "gmm") {
      r = pgen::gmm_suite(trials > 0 ? trials : 10, seed);
    } else {
      return fail(PGEN_ERR_INVALID_ARGUMENT, "unknown check suite '" + s + "'");
    }
    *report = copy_string(r.text());
    if (!r.passed()) return fail(PGEN_ERR_CHECK_FAILED, s + " suite failed");
    return PGEN_OK;
  });
}

pgen_status pgen_toy_data(const char* out_dir, int pairs, uint64_t seed) {
  if (!out_dir) return fail(PGEN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    pgen::write_toy_dataset(out_dir, pairs, seed);
    return PGEN_OK;
  });
}

}  // extern "C"
