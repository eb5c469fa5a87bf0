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
#include <stdexcept>
#include <string>
#include <string_view>

#include "pgen/model.hpp"
#include "pgen/sampler.hpp"
#include "pgen/trainer.hpp"

namespace pgen {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Whole-run configuration. Absent keys keep their defaults; unknown keys
/// are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainerConfig trainer;
  SamplerConfig sampler;
  std::string validation_manifest;  // empty: validate on the training pairs

  void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
/// Every field, defaults included.
std::string run_config_json(const RunConfig& cfg);

}  // namespace pgen
