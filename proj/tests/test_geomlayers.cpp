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

#include <cmath>

#include "pgen/checks.hpp"
#include "pgen/geomlayers.hpp"
#include "pgen/ops.hpp"
#include "pgen/synthetic.hpp"
#include "test_util.hpp"

namespace pgen {
namespace {

using testing::max_abs;
using testing::random_array;
using testing::relative_diff;
using testing::rotate_block;

struct Block {
  ParamStore<double> store;
  GvpBlock<double> gvp;

  Block(GvpConfig cfg, GvpKind kind, std::uint64_t seed) {
    Rng rng(seed);
    gvp = GvpBlock<double>(store, "g", cfg, kind, rng);
    // Nonzero biases so the tests are not blind to them.
    for (ParamId id : {gvp.b3, gvp.bg}) store.entry(id).value = random_array(rng, 1, store.entry(id).value.cols, 0.3);
  }

  ScalarVectorFeature<double> run(const Array<double>& s, const Array<double>& v) {
    Tape<double> t(false);
    Ctx<double> ctx{t, store};
    Sv<double> out = gvp(ctx, {t.constant(s), t.constant(v)});
    return {out.s.value(), out.v.value()};
  }
};

TEST(Gvp, ZeroVectorsGiveZeroVectors) {
  for (GvpKind kind : {GvpKind::Original, GvpKind::Perceptron, GvpKind::Linear}) {
    Block b({3, 2, 4, 3, 0, 0.2}, kind, 1);
    Rng rng(2);
    const auto out = b.run(random_array(rng, 5, 3), Array<double>(5, 6));
    EXPECT_EQ(max_abs(out.vectors), 0.0);
  }
}

TEST(Gvp, HandEvaluatedScalarChain) {
  // 2 vector channels, 2 scalars. W1 = W2 = I, W3 zero on the norm columns.
  Block b({2, 2, 2, 2, 2, 0.2}, GvpKind::Original, 3);
  auto& st = b.store;
  st.entry(b.gvp.w1).value.data = {1, 0, 0, 1};
  st.entry(b.gvp.w2).value.data = {1, 0, 0, 1};
  st.entry(b.gvp.w3).value.data = {0, 0, 1.5, -2.0, 0, 0, 0.5, 1.0};
  st.entry(b.gvp.b3).value.data = {0, 0};
  Array<double> s(1, 2);
  s.data = {0.4, 0.7};
  Array<double> v(1, 6);
  v.data = {1, 2, 2, 0, 3, 4};
  const auto out = b.run(s, v);
  const double z0 = 1.5 * 0.4 - 2.0 * 0.7, z1 = 0.5 * 0.4 + 1.0 * 0.7;
  EXPECT_NEAR(out.scalars(0, 0), 0.2 * z0, 1e-15);
  EXPECT_NEAR(out.scalars(0, 1), z1, 1e-15);
  // The vectors pass through W1 W2 = I scaled by the sigmoid gates.
  const auto& wg = st.entry(b.gvp.wg).value;
  const auto& bg = st.entry(b.gvp.bg).value;
  for (int c = 0; c < 2; ++c) {
    const double g = 1.0 / (1.0 + std::exp(-(wg(c, 0) * z0 + wg(c, 1) * z1 + bg(0, c))));
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(out.vectors(0, c * 3 + d), g * v(0, c * 3 + d), 1e-15);
  }
}

TEST(Gvp, LinearIsOriginalWithoutActivations) {
  Block lin({2, 2, 2, 2, 0, 0.2}, GvpKind::Linear, 5);
  Rng rng(6);
  const Array<double> s = random_array(rng, 1, 2), v = random_array(rng, 1, 6);
  const auto out = lin.run(s, v);
  const auto& st = lin.store;
  const auto& w1 = st.entry(lin.gvp.w1).value;
  const auto& w2 = st.entry(lin.gvp.w2).value;
  const auto& w3 = st.entry(lin.gvp.w3).value;
  const auto& b3 = st.entry(lin.gvp.b3).value;
  const auto& wg = st.entry(lin.gvp.wg).value;
  const auto& bg = st.entry(lin.gvp.bg).value;
  const int h = lin.gvp.config().hidden();
  double x1[4][3] = {}, x2[2][3] = {}, norms[4] = {};
  for (int a = 0; a < h; ++a)
    for (int d = 0; d < 3; ++d) {
      for (int c = 0; c < 2; ++c) x1[a][d] += w1(a, c) * v(0, 3 * c + d);
      norms[a] += x1[a][d] * x1[a][d];
    }
  for (int o = 0; o < 2; ++o)
    for (int d = 0; d < 3; ++d)
      for (int a = 0; a < h; ++a) x2[o][d] += w2(o, a) * x1[a][d];
  double s1[2];
  for (int o = 0; o < 2; ++o) {
    s1[o] = b3(0, o);
    for (int a = 0; a < h; ++a) s1[o] += w3(o, a) * std::sqrt(norms[a]);
    for (int c = 0; c < 2; ++c) s1[o] += w3(o, h + c) * s(0, c);
    EXPECT_NEAR(out.scalars(0, o), s1[o], 1e-14);
  }
  for (int o = 0; o < 2; ++o) {
    const double g = wg(o, 0) * s1[0] + wg(o, 1) * s1[1] + bg(0, o);
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(out.vectors(0, 3 * o + d), g * x2[o][d], 1e-14);
  }
}

TEST(Gvp, LinearIsLinearInVectorsForFixedScalarPath) {
  // With the norm columns of W3 zeroed the gate depends on scalars only.
  Block lin({3, 2, 3, 2, 0, 0.2}, GvpKind::Linear, 7);
  auto& w3 = lin.store.entry(lin.gvp.w3).value;
  for (int o = 0; o < w3.rows; ++o)
    for (int a = 0; a < lin.gvp.config().hidden(); ++a) w3(o, a) = 0;
  Rng rng(8);
  const Array<double> s = random_array(rng, 4, 3), x = random_array(rng, 4, 6), y = random_array(rng, 4, 6);
  Array<double> xy = x;
  for (std::size_t i = 0; i < xy.size(); ++i) xy.data[i] += y.data[i];
  const auto a = lin.run(s, x), b = lin.run(s, y), ab = lin.run(s, xy);
  for (std::size_t i = 0; i < ab.vectors.size(); ++i)
    EXPECT_NEAR(ab.vectors.data[i], a.vectors.data[i] + b.vectors.data[i], 1e-13);
}

TEST(Gvp, ChannelAxisMismatchIsNamed) {
  Block b({3, 2, 4, 3, 0, 0.2}, GvpKind::Original, 9);
  try {
    b.run(Array<double>(2, 4), Array<double>(2, 6));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("scalar channel axis"), std::string::npos);
  }
  try {
    b.run(Array<double>(2, 3), Array<double>(2, 9));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("vector channel axis"), std::string::npos);
  }
}

TEST(Gvp, ConfigRejectsBadChannelsAndSlope) {
  EXPECT_THROW((GvpConfig{0, 1, 1, 1, 0, 0.2}.validate()), std::invalid_argument);
  EXPECT_THROW((GvpConfig{1, 1, 1, 1, 0, 1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((GvpConfig{1, 1, 1, 1, 0, 0.2}.validate()));
}

TEST(VectorLeakyRelu, ParallelUnchangedAntiparallelLeaks) {
  ParamStore<double> store;
  const ParamId wd = store.add("wd", 1, 1);
  store.entry(wd).value.data = {1.0};
  Tape<double> t(false);
  Ctx<double> ctx{t, store};
  Array<double> v(1, 3);
  v.data = {0.0, 2.0, 0.0};
  auto out = vector_leaky_relu(ctx, t.constant(v), wd, 0.2);
  EXPECT_EQ(out.value().data, v.data);
  // Direction k = -v: v is antiparallel, so v - 0.8 <v,k>k = 0.2 v.
  store.entry(wd).value.data = {-1.0};
  out = vector_leaky_relu(ctx, t.constant(v), wd, 0.2);
  EXPECT_NEAR(out.value().data[1], 0.4, 1e-15);
  // Unit v against unit -v: output -0.2 k.
  Tape<double> t2(false);
  Array<double> dir(1, 3);
  dir.data = {0, 0, 1};
  Array<double> neg(1, 3);
  neg.data = {0, 0, -1};
  auto o2 = ad::vec_leaky_relu(t2.constant(neg), t2.constant(dir), 0.2);
  EXPECT_NEAR(o2.value().data[2], -0.2, 1e-15);
}

TEST(VectorLeakyRelu, ZeroDirectionFallsBackToIdentity) {
  Tape<double> t(false);
  Array<double> v(2, 3);
  v.data = {1, -2, 3, 4, 5, -6};
  Array<double> dir(2, 3);
  dir.data = {0, 0, 0, -4, -5, 6};
  auto out = ad::vec_leaky_relu(t.constant(v), t.constant(dir), 0.2);
  for (int d = 0; d < 3; ++d) EXPECT_EQ(out.value()(0, d), v(0, d));
  EXPECT_EQ(t.degenerate_directions, 1u);
  for (int d = 0; d < 3; ++d) EXPECT_NEAR(out.value()(1, d), 0.2 * v(1, d), 1e-14);
}

TEST(VectorLeakyRelu, DirectionMapMustPreserveChannels) {
  ParamStore<double> store;
  const ParamId wd = store.add("wd", 3, 2);
  Tape<double> t(false);
  Ctx<double> ctx{t, store};
  EXPECT_THROW(vector_leaky_relu(ctx, t.constant(Array<double>(1, 6)), wd, 0.2), ShapeError);
}

// Orbit property for each block kind, rotations and reflections.
class GvpOrbit : public ::testing::TestWithParam<int> { };

TEST_P(GvpOrbit, ScalarsInvariantVectorsCoTransform) {
  const GvpKind kind = static_cast<GvpKind>(GetParam());
  Block b({5, 4, 6, 3, 0, 0.2}, kind, 20 + GetParam());
  Rng rng(40 + GetParam());
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_orthogonal(rng, trial % 2 == 1);
    const Array<double> s = random_array(rng, 7, 5), v = random_array(rng, 7, 12);
    const auto base = b.run(s, v);
    const auto moved = b.run(s, rotate_block(v, m));
    EXPECT_LE(relative_diff(moved.scalars, base.scalars), 1e-10);
    EXPECT_LE(relative_diff(moved.vectors, rotate_block(base.vectors, m)), 1e-10);
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, GvpOrbit, ::testing::Values(0, 1, 2));

TEST(GvMlp, ZeroVectorsAndDeepStackOrbit) {
  ParamStore<double> store;
  Rng rng(50);
  GvMlp<double> mlp(store, "m", 4, 3, 8, 5, 2, 2, 0.2, rng);
  std::vector<GvpBlock<double>> stack;
  for (int l = 0; l < 6; ++l)
    stack.emplace_back(store, "p" + std::to_string(l), GvpConfig{4, 3, 4, 3, 0, 0.2}, GvpKind::Perceptron, rng);
  for (auto& e : store.entries())
    if (e.value.rows == 1) e.value = random_array(rng, 1, e.value.cols, 0.3);

  auto run_mlp = [&](const Array<double>& s, const Array<double>& v) {
    Tape<double> t(false);
    Ctx<double> ctx{t, store};
    Sv<double> out = mlp(ctx, {t.constant(s), t.constant(v)});
    return ScalarVectorFeature<double>{out.s.value(), out.v.value()};
  };
  auto run_stack = [&](const Array<double>& s, const Array<double>& v) {
    Tape<double> t(false);
    Ctx<double> ctx{t, store};
    Sv<double> x{t.constant(s), t.constant(v)};
    for (const auto& g : stack) x = g(ctx, x);
    return ScalarVectorFeature<double>{x.s.value(), x.v.value()};
  };
  const Array<double> s = random_array(rng, 6, 4);
  EXPECT_EQ(max_abs(run_mlp(s, Array<double>(6, 9)).vectors), 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_orthogonal(rng, trial % 2 == 0);
    const Array<double> v = random_array(rng, 6, 9);
    const auto base = run_stack(s, v), moved = run_stack(s, rotate_block(v, m));
    EXPECT_LE(relative_diff(moved.scalars, base.scalars), 1e-8);
    EXPECT_LE(relative_diff(moved.vectors, rotate_block(base.vectors, m)), 1e-8);
  }
}

TEST(Gvp, GradientsMatchFiniteDifferences) {
  for (GvpKind kind : {GvpKind::Original, GvpKind::Perceptron, GvpKind::Linear}) {
    Block b({3, 2, 4, 3, 0, 0.2}, kind, 60);
    Rng rng(61);
    const ParamId xs = b.store.add("xs", 4, 3), xv = b.store.add("xv", 4, 6);
    b.store.entry(xs).value = random_array(rng, 4, 3);
    b.store.entry(xv).value = random_array(rng, 4, 6);
    const Array<double> ps = random_array(rng, 4, 4), pv = random_array(rng, 4, 9);
    auto root = [&](Tape<double>& t) {
      Ctx<double> ctx{t, b.store};
      Sv<double> out = b.gvp(ctx, {ctx.p(xs), ctx.p(xv)});
      return ad::add(ad::sum_all(ad::mul(out.s, t.constant(ps))), ad::sum_all(ad::mul(out.v, t.constant(pv))));
    };
    const CheckLine line = finite_difference_check("gvp", b.store, root, rng);
    EXPECT_TRUE(line.passed()) << static_cast<int>(kind) << " max error " << line.max_error;
  }
}

TEST(Init, UniformWithinFanInBound) {
  Rng rng(70);
  Array<double> w(40, 25);
  init_uniform(w, rng);
  double lo = 1, hi = -1;
  for (double x : w.data) lo = std::min(lo, x), hi = std::max(hi, x);
  EXPECT_GE(lo, -0.2);
  EXPECT_LE(hi, 0.2);
  EXPECT_LT(lo, -0.18);
  EXPECT_GT(hi, 0.18);
}

}  // namespace
}  // namespace pgen
