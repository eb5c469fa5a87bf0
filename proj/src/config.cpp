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

#include "pgen/config.hpp"

#include <functional>
#include <map>

#include <json.hpp>

namespace pgen {

namespace {

using json = nlohmann::ordered_json;

// Binds JSON keys of one section to struct fields, in both directions.
class Section {
 public:
  explicit Section(std::string name) : name_(std::move(name)) { }

  template <class V>
  Section& field(const std::string& key, V& ref) {
    readers_[key] = [this, key, &ref](const json& j) {
      try {
        ref = j.get<V>();
      } catch (const json::exception&) {
        throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
      }
    };
    writers_.push_back([key, &ref](json& out) { out[key] = ref; });
    return *this;
  }

  void read(const json& obj) const {
    if (!obj.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    for (const auto& [k, v] : obj.items()) {
      const auto it = readers_.find(k);
      if (it == readers_.end()) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
      it->second(v);
    }
  }

  json write() const {
    json out = json::object();
    for (const auto& w : writers_) w(out);
    return out;
  }

 private:
  std::string name_;
  std::map<std::string, std::function<void(const json&)>> readers_;
  std::vector<std::function<void(json&)>> writers_;
};

struct Binding {
  Section model{"model"}, trainer{"trainer"}, sampler{"sampler"};

  explicit Binding(RunConfig& c) {
    EncoderConfig& e = c.model.encoder;
    PredictorConfig& h = c.model.heads;
    model.field("layers", e.layers).field("node_scalar", e.node_scalar).field("node_vector", e.node_vector)
        .field("edge_scalar", e.edge_scalar).field("edge_vector", e.edge_vector).field("knn", e.knn)
        .field("slope", e.slope).field("frontier_scalar", h.frontier_scalar)
        .field("frontier_vector", h.frontier_vector).field("position_scalar", h.position_scalar)
        .field("position_vector", h.position_vector).field("components", h.components)
        .field("field_scalar", h.field_scalar).field("field_vector", h.field_vector)
        .field("field_edge_scalar", h.field_edge_scalar).field("field_edge_vector", h.field_edge_vector)
        .field("field_knn", h.field_knn).field("heads", h.heads);
    TrainerConfig& t = c.trainer;
    trainer.field("lr", t.lr).field("beta1", t.beta1).field("beta2", t.beta2).field("eps", t.eps)
        .field("max_grad_norm", t.max_grad_norm)
        .field("batch", t.batch).field("decay", t.decay).field("patience", t.patience)
        .field("validation_interval", t.validation_interval).field("iterations", t.iterations)
        .field("checkpoint_interval", t.checkpoint_interval).field("log_interval", t.log_interval)
        .field("validation_examples", t.validation_examples)
        .field("first_atom_radius", t.masking.first_atom_radius)
        .field("negative_inner", t.masking.negative_inner).field("negative_outer", t.masking.negative_outer)
        .field("negative_clearance", t.masking.negative_clearance).field("query_jitter", t.masking.query_jitter);
    SamplerConfig& s = c.sampler;
    sampler.field("threshold", s.threshold).field("max_atoms", s.max_atoms).field("retries", s.retries)
        .field("temperature", s.temperature);
  }
};

}  // namespace

void RunConfig::validate() const {
  model.validate();
  trainer.validate();
  sampler.validate();
  if (!(trainer.masking.negative_inner >= 0 && trainer.masking.negative_outer > trainer.masking.negative_inner))
    throw ConfigError("negative shell needs 0 <= inner < outer");
  if (!(trainer.masking.query_jitter >= 0)) throw ConfigError("query_jitter must be non-negative");
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  Binding b(cfg);
  for (const auto& [k, v] : doc.items()) {
    try {
      if (k == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (k == "validation_manifest") {
        cfg.validation_manifest = v.get<std::string>();
      } else if (k == "model") {
        b.model.read(v);
      } else if (k == "trainer") {
        b.trainer.read(v);
      } else if (k == "sampler") {
        b.sampler.read(v);
      } else {
        throw ConfigError("unknown config key '" + k + "'");
      }
    } catch (const json::exception&) {
      throw ConfigError("config key '" + k + "' has the wrong type");
    }
  }
  cfg.trainer.seed = cfg.seed;
  cfg.sampler.seed = cfg.seed;
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  Binding b(copy);
  json out;
  out["seed"] = copy.seed;
  out["validation_manifest"] = copy.validation_manifest;
  out["model"] = b.model.write();
  out["trainer"] = b.trainer.write();
  out["sampler"] = b.sampler.write();
  return out.dump(2);
}

}  // namespace pgen
