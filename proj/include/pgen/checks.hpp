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

// Runtime property suites behind `pgen check`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgen/diffcore.hpp"
#include "pgen/model.hpp"
#include "pgen/random.hpp"

namespace pgen {

struct CheckLine {
  std::string name;
  double max_error = 0;
  double tolerance = 0;
  long checked = 0;
  long skipped = 0;  // finite-difference entries never resolved by any step
  long refined = 0;  // entries checked at a step below FdOptions::step

  // At most 5% of the entries may go unresolved.
  bool passed() const { return checked > 0 && max_error <= tolerance && skipped * 20 <= checked + skipped; }
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckLine> lines;

  bool passed() const;
  std::string text() const;
};

struct FdOptions {
  double step = 1e-4;
  // Relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  int entries_per_param = 0;  // 0 checks every entry
  int shrink_attempts = 2;    // step /= 10 when the stencil is unresolved
};

/// Central finite differences against the tape's gradient for a scalar
/// root. A stencil is unresolved when its +h/-h evaluations take different
/// branches than the base point, or when the h and h/2 estimates disagree
/// by more than a tenth of the tolerance (curvature below the step scale,
/// as around near-zero vector directions). Unresolved entries are retried
/// with a smaller step, then skipped.
CheckLine finite_difference_check(const std::string& name, ParamStore<double>& store,
                                  const std::function<Var<double>(Tape<double>&)>& root, Rng& rng,
                                  const FdOptions& opts = {});

/// Max |a - b| / max(max |b|, 1e-300) over two equally sized blocks.
double relative_block_error(const std::vector<double>& a, const std::vector<double>& b);

/// Model used by the property suites: the default architecture with
/// reduced widths and depth.
ModelConfig check_model_config();

SuiteReport equivariance_suite(int trials, std::uint64_t seed);
SuiteReport attention_suite(int trials, std::uint64_t seed);
SuiteReport gradient_suite(int trials, std::uint64_t seed);
SuiteReport gmm_suite(int trials, std::uint64_t seed);

}  // namespace pgen
