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
#include <numeric>
#include <set>

#include "pgen/encoder.hpp"
#include "pgen/ops.hpp"
#include "pgen/synthetic.hpp"
#include "test_util.hpp"

namespace pgen {
namespace {

using testing::max_abs;
using testing::max_abs_diff;
using testing::random_array;
using testing::relative_diff;
using testing::rotate_block;

void randomize_biases(ParamStore<double>& store, Rng& rng) {
  for (auto& e : store.entries())
    if (e.name.ends_with(".b") || e.name.ends_with(".b3") || e.name.ends_with(".bg"))
      e.value = random_array(rng, 1, e.value.cols, 0.3);
}

struct MessageFixture {
  ParamStore<double> store;
  MessageModule<double> msg;
  MessageWidths w{4, 3, 5, 2, 6, 3};

  explicit MessageFixture(std::uint64_t seed) {
    Rng rng(seed);
    msg = MessageModule<double>(store, "m", w, 0.2, rng);
    randomize_biases(store, rng);
  }

  ScalarVectorFeature<double> run(const ScalarVectorFeature<double>& nodes, const ScalarVectorFeature<double>& edges,
                                  const std::vector<int>& sender) {
    Tape<double> t(false);
    Ctx<double> ctx{t, store};
    Sv<double> out = msg(ctx, constant_sv(t, nodes), constant_sv(t, edges), sender);
    return {out.s.value(), out.v.value()};
  }
};

TEST(Message, ZeroVectorInputsGiveZeroVectorMessage) {
  MessageFixture f(1);
  Rng rng(2);
  const ScalarVectorFeature<double> nodes{random_array(rng, 3, 4), Array<double>(3, 9)};
  const ScalarVectorFeature<double> edges{random_array(rng, 5, 5), Array<double>(5, 6)};
  const auto out = f.run(nodes, edges, {0, 1, 2, 2, 0});
  EXPECT_EQ(out.scalars.rows, 5);
  EXPECT_EQ(max_abs(out.vectors), 0.0);
}

void set(ParamStore<double>& st, ParamId id, std::vector<double> v) { st.entry(id).value.data = std::move(v); }

TEST(Message, HandChainOnOneChannel) {
  ParamStore<double> st;
  Rng rng(3);
  MessageModule<double> m(st, "m", MessageWidths{1, 1, 1, 1, 1, 1}, 0.2, rng);
  // node_lin passes (s, v) through, edge_per halves the vector and leaks the scalar.
  for (const GvpBlock<double>* g : {&m.node_lin, &m.edge_per, &m.out_per}) {
    set(st, g->w1, {1});
    set(st, g->w2, {1});
    set(st, g->w3, {0, 1});
    set(st, g->b3, {0});
    set(st, g->wg, {0});
    set(st, g->bg, {0});
    if (g->wd.valid()) set(st, g->wd, {1});
  }
  set(st, m.node_lin.bg, {1});
  const double a = 0.7, b = -1.3, c = 0.4;
  set(st, m.edge_to_scalar.w, {1});
  set(st, m.edge_to_scalar.b, {0});
  set(st, m.edge_to_vector.w, {a});
  set(st, m.edge_to_vector.b, {0});
  set(st, m.node_to_vector.w, {b});
  set(st, m.node_to_vector.b, {0});
  set(st, m.edge_vectors.w, {c});

  Array<double> ns(1, 1, 0.9), nv(1, 3), es(1, 1, -0.5), ev(1, 3);
  nv.data = {1, 2, -1};
  ev.data = {0.5, -1, 2};
  Tape<double> t(false);
  Ctx<double> ctx{t, st};
  const std::vector<int> sender{0};
  Sv<double> out = m(ctx, {t.constant(ns), t.constant(nv)}, {t.constant(es), t.constant(ev)}, sender);

  const double es1 = 0.2 * -0.5;  // leaky edge scalar
  const double ms = 0.9 * es1;
  EXPECT_NEAR(out.s.value().data[0], 0.2 * ms, 1e-15);
  for (int d = 0; d < 3; ++d) {
    const double mv = a * es1 * nv.data[d] + b * 0.9 * c * 0.5 * ev.data[d];
    // out_per halves the vector; its direction map is the identity so the
    // vector nonlinearity leaves it unchanged.
    EXPECT_NEAR(out.v.value().data[d], 0.5 * mv, 1e-15);
  }
}

TEST(Message, RotationOrbit) {
  MessageFixture f(4);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rot = random_orthogonal(rng, trial % 2 == 1);
    const ScalarVectorFeature<double> nodes{random_array(rng, 4, 4), random_array(rng, 4, 9)};
    const ScalarVectorFeature<double> edges{random_array(rng, 7, 5), random_array(rng, 7, 6)};
    const std::vector<int> sender{0, 1, 2, 3, 3, 2, 1};
    const auto base = f.run(nodes, edges, sender);
    const auto moved = f.run({nodes.scalars, rotate_block(nodes.vectors, rot)},
                             {edges.scalars, rotate_block(edges.vectors, rot)}, sender);
    EXPECT_LE(relative_diff(moved.scalars, base.scalars), 1e-8);
    EXPECT_LE(relative_diff(moved.vectors, rotate_block(base.vectors, rot)), 1e-8);
  }
}

TEST(Message, SenderCountMustMatchEdges) {
  MessageFixture f(6);
  const ScalarVectorFeature<double> nodes{Array<double>(2, 4), Array<double>(2, 9)};
  const ScalarVectorFeature<double> edges{Array<double>(3, 5), Array<double>(3, 6)};
  EXPECT_THROW(f.run(nodes, edges, {0, 1}), ShapeError);
}

struct EncoderFixture {
  ParamStore<double> store;
  Encoder<double> enc;

  explicit EncoderFixture(std::uint64_t seed, int layers = 2) {
    Rng rng(seed);
    enc = Encoder<double>(store, "e", EncoderConfig{layers, 8, 4, 6, 3, 6, 0.2}, rng);
    randomize_biases(store, rng);
  }

  std::vector<ScalarVectorFeature<double>> run(const ContextGraph& g) {
    Tape<double> t(false);
    Ctx<double> ctx{t, store};
    const auto out = enc(ctx, g, featurize_nodes(g), featurize_edges(g));
    std::vector<ScalarVectorFeature<double>> layers;
    for (const auto& l : out.layers) layers.push_back({l.s.value(), l.v.value()});
    return layers;
  }
};

TEST(Update, SingleNeighbourAndCancellingMessages) {
  EncoderFixture f(7, 1);
  Rng rng(8);
  const ScalarVectorFeature<double> node{random_array(rng, 2, 8), random_array(rng, 2, 12)};
  const Array<double> ms = random_array(rng, 1, 8), mv = random_array(rng, 1, 12);
  Tape<double> t(false);
  Ctx<double> ctx{t, f.store};
  const Sv<double> x = constant_sv(t, node);
  const Sv<double> u = f.enc.update(0)(ctx, x);

  // Node 0 receives one message, node 1 receives m and -m.
  Array<double> s3(3, 8), v3(3, 12);
  for (int c = 0; c < 8; ++c) s3(0, c) = ms(0, c), s3(1, c) = ms(0, c), s3(2, c) = -ms(0, c);
  for (int c = 0; c < 12; ++c) v3(0, c) = mv(0, c), v3(1, c) = mv(0, c), v3(2, c) = -mv(0, c);
  const std::vector<int> dst{0, 1, 1};
  const Sv<double> out = f.enc.aggregate_and_update(ctx, 0, x, {t.constant(s3), t.constant(v3)}, dst);
  for (int c = 0; c < 8; ++c) {
    EXPECT_DOUBLE_EQ(out.s.value()(0, c), u.s.value()(0, c) + ms(0, c));
    EXPECT_NEAR(out.s.value()(1, c), u.s.value()(1, c), 1e-15);
  }
  for (int c = 0; c < 12; ++c) {
    EXPECT_DOUBLE_EQ(out.v.value()(0, c), u.v.value()(0, c) + mv(0, c));
    EXPECT_NEAR(out.v.value()(1, c), u.v.value()(1, c), 1e-15);
  }
  const std::vector<int> lonely{0, 0, 0};
  EXPECT_THROW(f.enc.aggregate_and_update(ctx, 0, x, {t.constant(s3), t.constant(v3)}, lonely),
               std::invalid_argument);
}

TEST(Update, NeighbourOrderDoesNotMatter) {
  EncoderFixture f(9, 1);
  Rng rng(10);
  const ScalarVectorFeature<double> node{random_array(rng, 2, 8), random_array(rng, 2, 12)};
  const Array<double> ms = random_array(rng, 5, 8), mv = random_array(rng, 5, 12);
  const std::vector<int> dst{0, 1, 0, 1, 0};
  const std::vector<int> perm{4, 2, 3, 0, 1};
  Array<double> pms(5, 8), pmv(5, 12);
  std::vector<int> pdst(5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 8; ++c) pms(r, c) = ms(perm[r], c);
    for (int c = 0; c < 12; ++c) pmv(r, c) = mv(perm[r], c);
    pdst[r] = dst[perm[r]];
  }
  Tape<double> t(false);
  Ctx<double> ctx{t, f.store};
  const Sv<double> x = constant_sv(t, node);
  const Sv<double> a = f.enc.aggregate_and_update(ctx, 0, x, {t.constant(ms), t.constant(mv)}, dst);
  const Sv<double> b = f.enc.aggregate_and_update(ctx, 0, x, {t.constant(pms), t.constant(pmv)}, pdst);
  EXPECT_LE(max_abs_diff(a.s.value(), b.s.value()), 1e-14);
  EXPECT_LE(max_abs_diff(a.v.value(), b.v.value()), 1e-14);
}

TEST(Encoder, RejectsZeroLayers) {
  ParamStore<double> store;
  Rng rng(11);
  EXPECT_THROW(Encoder<double>(store, "e", EncoderConfig{0, 8, 4, 6, 3, 6, 0.2}, rng), std::invalid_argument);
  EXPECT_THROW((EncoderConfig{1, 8, 0, 6, 3, 6, 0.2}.validate()), std::invalid_argument);
}

ContextGraph moved_context(const std::vector<Atom>& pocket, const MoleculeFragment& lig,
                           const std::array<Vec3, 3>& m, const Vec3& shift, int k) {
  std::vector<Atom> p = pocket;
  for (Atom& a : p) a.coord = pgen::apply(m, a.coord) + shift;
  MoleculeFragment l;
  for (const Atom& a : lig.atoms()) l.add_atom(a.element, pgen::apply(m, a.coord) + shift);
  for (const Bond& b : lig.bonds()) l.add_bond(b.i, b.j, b.order);
  return build_context(p, l, k);
}

TEST(Encoder, EuclideanOrbitAtEveryLayer) {
  EncoderFixture f(12, 3);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const MoleculeFragment lig = random_ligand(rng, 6);
    const std::vector<Atom> pocket = random_pocket_around(lig, rng);
    const auto m = random_orthogonal(rng, trial % 2 == 0);
    const Vec3 shift{uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const auto base = f.run(build_context(pocket, lig, 6));
    const auto moved = f.run(moved_context(pocket, lig, m, shift, 6));
    ASSERT_EQ(base.size(), 4u);
    for (std::size_t l = 0; l < base.size(); ++l) {
      EXPECT_LE(relative_diff(moved[l].scalars, base[l].scalars), 1e-8) << "layer " << l;
      EXPECT_LE(relative_diff(moved[l].vectors, rotate_block(base[l].vectors, m)), 1e-8) << "layer " << l;
    }
  }
}

TEST(Encoder, AtomOrderPermutesOutputs) {
  EncoderFixture f(14);
  Rng rng(15);
  const MoleculeFragment lig = random_ligand(rng, 5);
  std::vector<Atom> pocket = random_pocket_around(lig, rng);
  const auto base = f.run(build_context(pocket, lig, 6)).back();
  // Reverse the pocket list; the graph is the same up to relabelling, but
  // neighbour ties could reorder, so the random coordinates keep them apart.
  std::vector<Atom> rev(pocket.rbegin(), pocket.rend());
  const auto out = f.run(build_context(rev, lig, 6)).back();
  const int np = static_cast<int>(pocket.size());
  double err = 0, scale = 0;
  for (int i = 0; i < np + lig.size(); ++i) {
    const int j = i < np ? np - 1 - i : i;
    for (int c = 0; c < base.scalars.cols; ++c) {
      err = std::max(err, std::abs(out.scalars(j, c) - base.scalars(i, c)));
      scale = std::max(scale, std::abs(base.scalars(i, c)));
    }
    for (int c = 0; c < base.vectors.cols; ++c) err = std::max(err, std::abs(out.vectors(j, c) - base.vectors(i, c)));
  }
  EXPECT_LE(err, 1e-12 * std::max(scale, 1.0));
}

TEST(Encoder, AtomsOutsideReceptiveFieldHaveNoEffect) {
  const int layers = 2;
  EncoderFixture f(16, layers);
  Rng rng(17);
  const MoleculeFragment lig = random_ligand(rng, 10);
  const std::vector<Atom> pocket = random_pocket_around(lig, rng);
  const ContextGraph g = build_context(pocket, lig, 6);
  const int np = g.num_pocket;
  // Nodes whose encoding depends on fragment atom `a` after `layers` rounds.
  for (int a = 0; a < lig.size(); ++a) {
    std::set<int> reached{np + a};
    for (int l = 0; l < layers; ++l) {
      std::set<int> next = reached;
      for (int e = 0; e < g.num_edges(); ++e)
        if (reached.count(g.edge_src[e])) next.insert(g.edge_dst[e]);
      reached = next;
    }
    if (static_cast<int>(reached.size()) == g.size()) continue;
    // Swap the element; geometry and the graph stay identical.
    MoleculeFragment changed;
    for (int i = 0; i < lig.size(); ++i)
      changed.add_atom(i == a ? Element::S : lig.atom(i).element, lig.atom(i).coord);
    for (const Bond& b : lig.bonds()) changed.add_bond(b.i, b.j, b.order);
    const auto base = f.run(g).back();
    const auto out = f.run(build_context(pocket, changed, 6)).back();
    int untouched = 0;
    for (int i = 0; i < g.size(); ++i) {
      if (reached.count(i)) continue;
      ++untouched;
      for (int c = 0; c < base.scalars.cols; ++c) ASSERT_EQ(out.scalars(i, c), base.scalars(i, c));
      for (int c = 0; c < base.vectors.cols; ++c) ASSERT_EQ(out.vectors(i, c), base.vectors(i, c));
    }
    EXPECT_GT(untouched, 0);
    bool moved = false;
    for (int c = 0; c < base.scalars.cols; ++c) moved |= out.scalars(np + a, c) != base.scalars(np + a, c);
    EXPECT_TRUE(moved);
    return;
  }
  GTEST_SKIP() << "every fragment atom reaches the whole graph";
}

}  // namespace
}  // namespace pgen
