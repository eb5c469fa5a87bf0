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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pgen/pgen.h"

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class CapiWorkdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("pgen_capi_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed())
                                        + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& leaf) const { return (dir_ / leaf).string(); }

  fs::path dir_;
};

TEST(Capi, VersionAndErrors) {
  EXPECT_STRNE(pgen_version(), "");
  pgen_model* m = nullptr;
  EXPECT_EQ(pgen_model_load(nullptr, &m), PGEN_ERR_INVALID_ARGUMENT);
  EXPECT_STRNE(pgen_last_error(), "");
  EXPECT_EQ(pgen_model_load("/nonexistent/model.ckpt", &m), PGEN_ERR_IO);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(pgen_last_error()).find("/nonexistent/model.ckpt"), std::string::npos);
  size_t count = 0;
  EXPECT_EQ(pgen_model_parameter_count(nullptr, &count), PGEN_ERR_INVALID_ARGUMENT);
  int produced = -1;
  EXPECT_EQ(pgen_sample(nullptr, "x.pdb", 1, 0, "y.sdf", &produced), PGEN_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(pgen_eval("bonds", "a", "b", nullptr, "c"), PGEN_ERR_INVALID_ARGUMENT);
  char* report = nullptr;
  EXPECT_EQ(pgen_check("everything", 1, 0, &report), PGEN_ERR_INVALID_ARGUMENT);
  pgen_model_free(nullptr);
  pgen_string_free(nullptr);
}

TEST(Capi, GmmCheckReportsLines) {
  char* report = nullptr;
  for (std::uint64_t seed : {0u, 1u}) {
    const pgen_status st = pgen_check("gmm", 5, seed, &report);
    ASSERT_NE(report, nullptr);
    const std::string text = report;
    pgen_string_free(report);
    EXPECT_NE(text.find("unit-density-at-mean"), std::string::npos);
    // The status mirrors the report: any FAIL line means CHECK_FAILED.
    if (text.find(" FAIL") == std::string::npos) {
      EXPECT_EQ(st, PGEN_OK);
      EXPECT_EQ(std::string(pgen_last_error()), "");
    } else {
      EXPECT_EQ(st, PGEN_ERR_CHECK_FAILED);
      EXPECT_NE(std::string(pgen_last_error()), "");
    }
  }
}

TEST_F(CapiWorkdir, CorruptInputsMapToFormatErrors) {
  std::ofstream(path("bad.ckpt")) << "NOTACHECKPOINT";
  pgen_model* m = nullptr;
  EXPECT_EQ(pgen_model_load(path("bad.ckpt").c_str(), &m), PGEN_ERR_FORMAT);
  std::ofstream(path("bad.sdf")) << "junk\n";
  std::ofstream(path("out.json"));
  EXPECT_EQ(pgen_eval("rings", path("bad.sdf").c_str(), path("bad.sdf").c_str(), nullptr, path("o.json").c_str()),
            PGEN_ERR_FORMAT);
  std::ofstream(path("config.json")) << R"({"model": {"layres": 2}})";
  ASSERT_EQ(pgen_toy_data(path("data").c_str(), 1, 3), PGEN_OK);
  EXPECT_EQ(pgen_train(path("config.json").c_str(), path("data/manifest.jsonl").c_str(), path("run").c_str(),
                       nullptr, 0),
            PGEN_ERR_CONFIG);
}

TEST_F(CapiWorkdir, TrainSampleEvaluate) {
  ASSERT_EQ(pgen_toy_data(path("data").c_str(), 2, 4), PGEN_OK) << pgen_last_error();
  std::ofstream(path("config.json")) << R"({"seed": 1,
    "model": {"layers": 1, "node_scalar": 8, "node_vector": 4, "edge_scalar": 8, "edge_vector": 4, "knn": 8,
              "frontier_scalar": 8, "frontier_vector": 4, "position_scalar": 8, "position_vector": 4,
              "field_scalar": 8, "field_vector": 4, "field_edge_scalar": 8, "field_edge_vector": 4, "field_knn": 8},
    "trainer": {"lr": 0.001, "batch": 2, "iterations": 6, "validation_interval": 3, "checkpoint_interval": 3,
                "validation_examples": 1},
    "sampler": {"max_atoms": 8, "threshold": 0.3}})";
  ASSERT_EQ(pgen_train(path("config.json").c_str(), path("data/manifest.jsonl").c_str(), path("run").c_str(),
                       nullptr, 0),
            PGEN_OK)
      << pgen_last_error();
  EXPECT_TRUE(fs::exists(path("run/last.ckpt")));
  EXPECT_TRUE(fs::exists(path("run/iter_3.ckpt")));
  EXPECT_TRUE(fs::exists(path("run/train.log")));

  pgen_model* m = nullptr;
  ASSERT_EQ(pgen_model_load(path("run/last.ckpt").c_str(), &m), PGEN_OK) << pgen_last_error();
  size_t count = 0;
  ASSERT_EQ(pgen_model_parameter_count(m, &count), PGEN_OK);
  EXPECT_GT(count, 0u);
  char* cfg = nullptr;
  ASSERT_EQ(pgen_model_config_json(m, &cfg), PGEN_OK);
  EXPECT_NE(std::string(cfg).find("\"field_knn\": 8"), std::string::npos);
  pgen_string_free(cfg);

  int produced = -1;
  const pgen_status st = pgen_sample(m, path("data/pair_0.pdb").c_str(), 2, 7, path("a.sdf").c_str(), &produced);
  ASSERT_TRUE(st == PGEN_OK || st == PGEN_ERR_INCOMPLETE) << pgen_last_error();
  if (st == PGEN_OK) {
    EXPECT_EQ(produced, 2);
    int again = -1;
    ASSERT_EQ(pgen_sample(m, path("data/pair_0.pdb").c_str(), 2, 7, path("b.sdf").c_str(), &again), PGEN_OK);
    EXPECT_EQ(slurp(path("a.sdf")), slurp(path("b.sdf")));
    ASSERT_EQ(pgen_eval("rings", path("data/pair_0.sdf").c_str(), path("a.sdf").c_str(), nullptr,
                        path("rings.json").c_str()),
              PGEN_OK)
        << pgen_last_error();
    EXPECT_NE(slurp(path("rings.json")).find("ring"), std::string::npos);
  } else {
    EXPECT_LT(produced, 2);
    EXPECT_FALSE(fs::exists(path("a.sdf")));
  }
  EXPECT_EQ(pgen_sample(m, path("missing.pdb").c_str(), 1, 7, path("c.sdf").c_str(), &produced), PGEN_ERR_IO);
  EXPECT_EQ(pgen_sample(m, path("data/pair_0.pdb").c_str(), 0, 7, path("c.sdf").c_str(), &produced),
            PGEN_ERR_INVALID_ARGUMENT);
  pgen_model_free(m);

  // Resuming from the mid-run checkpoint finishes at the same place.
  ASSERT_EQ(pgen_train(path("config.json").c_str(), path("data/manifest.jsonl").c_str(), path("resumed").c_str(),
                       path("run/iter_3.ckpt").c_str(), 0),
            PGEN_OK)
      << pgen_last_error();
  EXPECT_EQ(slurp(path("resumed/last.ckpt")), slurp(path("run/last.ckpt")));
}

}  // namespace
