/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The pgen Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PGEN_PGEN_H_
#define PGEN_PGEN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PGEN_API __declspec(dllexport)
#else
#define PGEN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pgen_status {
  PGEN_OK = 0,
  PGEN_ERR_INVALID_ARGUMENT = 1,
  PGEN_ERR_IO = 2,
  PGEN_ERR_FORMAT = 3,       /* malformed PDB, SDF, manifest or checkpoint */
  PGEN_ERR_CONFIG = 4,       /* malformed config, or checkpoint/config mismatch */
  PGEN_ERR_NUMERIC = 5,      /* non-finite value during training or sampling */
  PGEN_ERR_CHECK_FAILED = 6, /* a property suite exceeded its tolerance */
  PGEN_ERR_INCOMPLETE = 7,   /* fewer valid molecules than requested */
  PGEN_ERR_INTERNAL = 99
} pgen_status;

/* Message of the last failing call on this thread; "" after a success. */
PGEN_API const char* pgen_last_error(void);
PGEN_API const char* pgen_version(void);

/* Strings returned through char** out-parameters. */
PGEN_API void pgen_string_free(char* s);

typedef struct pgen_model pgen_model;

PGEN_API pgen_status pgen_model_load(const char* checkpoint_path, pgen_model** out);
PGEN_API void pgen_model_free(pgen_model* model);
PGEN_API pgen_status pgen_model_parameter_count(const pgen_model* model, size_t* out);
/* Config echo stored in the checkpoint, as JSON. */
PGEN_API pgen_status pgen_model_config_json(const pgen_model* model, char** out);

/* resume_checkpoint may be NULL. echo_log != 0 mirrors the training log to stdout. */
PGEN_API pgen_status pgen_train(const char* config_path, const char* manifest_path, const char* out_dir,
                                const char* resume_checkpoint, int echo_log);

/* Writes exactly num molecules to out_sdf, or nothing and
 * PGEN_ERR_INCOMPLETE. *produced receives the valid count either way. */
PGEN_API pgen_status pgen_sample(const pgen_model* model, const char* pocket_pdb, int num, uint64_t seed,
                                 const char* out_sdf, int* produced);

/* kind is "rings" or "angles"; pattern may be NULL (all default patterns). */
PGEN_API pgen_status pgen_eval(const char* kind, const char* ref_sdf, const char* gen_sdf, const char* pattern,
                               const char* out_json);

/* suite is "equivariance", "attention", "gradients" or "gmm". trials <= 0
 * selects the suite default. *report receives one line per property. */
PGEN_API pgen_status pgen_check(const char* suite, int trials, uint64_t seed, char** report);

PGEN_API pgen_status pgen_toy_data(const char* out_dir, int pairs, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* PGEN_PGEN_H_ */
