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

#include "pgen/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "pgen/ops.hpp"
#include "pgen/synthetic.hpp"
#include "pgen/trainer.hpp"

namespace pgen {

bool SuiteReport::passed() const {
  if (lines.empty()) return false;
  for (const CheckLine& l : lines)
    if (!l.passed()) return false;
  return true;
}

std::string SuiteReport::text() const {
  std::ostringstream os;
  for (const CheckLine& l : lines) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %-24s max_error %.3e tolerance %.1e checked %ld refined %ld skipped %ld %s\n",
                  suite.c_str(), l.name.c_str(), l.max_error, l.tolerance, l.checked, l.refined, l.skipped,
                  l.passed() ? "PASS" : "FAIL");
    os << buf;
  }
  return os.str();
}

double relative_block_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_block_error: size mismatch");
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

CheckLine finite_difference_check(const std::string& name, ParamStore<double>& store,
                                  const std::function<Var<double>(Tape<double>&)>& root, Rng& rng,
                                  const FdOptions& opts) {
  CheckLine line{name, 0.0, 1e-4, 0, 0};
  store.zero_grad();
  std::uint64_t base_sig;
  {
    Tape<double> tape(true);
    Var<double> r = root(tape);
    base_sig = tape.kink_signature();
    tape.backward(r);
  }
  auto eval = [&](std::uint64_t& sig) {
    Tape<double> tape(false);
    const double v = root(tape).value().data[0];
    sig = tape.kink_signature();
    return v;
  };
  for (auto& e : store.entries()) {
    const std::size_t n = e.value.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (opts.entries_per_param > 0 && n > static_cast<std::size_t>(opts.entries_per_param)) {
      for (int i = 0; i < opts.entries_per_param; ++i)
        std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
      idx.resize(opts.entries_per_param);
    }
    for (std::size_t i : idx) {
      const double analytic = e.grad.data[i];
      const double x0 = e.value.data[i];
      double h = opts.step;
      bool done = false;
      for (int attempt = 0; attempt <= opts.shrink_attempts && !done; ++attempt, h /= 10) {
        std::uint64_t s1, s2, s3, s4;
        auto at = [&](double x, std::uint64_t& sig) {
          e.value.data[i] = x;
          return eval(sig);
        };
        const double fp = at(x0 + h, s1), fm = at(x0 - h, s2);
        const double fp2 = at(x0 + h / 2, s3), fm2 = at(x0 - h / 2, s4);
        e.value.data[i] = x0;
        if (s1 != base_sig || s2 != base_sig || s3 != base_sig || s4 != base_sig) continue;
        const double numeric = (fp - fm) / (2 * h);
        const double half = (fp2 - fm2) / h;
        const double scale = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
        if (std::abs(numeric - half) > 0.1 * line.tolerance * scale) continue;
        line.max_error = std::max(line.max_error, std::abs(analytic - numeric) / scale);
        ++line.checked;
        if (attempt > 0) ++line.refined;
        done = true;
      }
      if (!done) ++line.skipped;
    }
  }
  store.zero_grad();
  return line;
}

ModelConfig check_model_config() {
  ModelConfig c;
  c.encoder.layers = 4;
  c.encoder.node_scalar = 64;
  c.encoder.node_vector = 16;
  c.encoder.edge_scalar = 32;
  c.encoder.edge_vector = 16;
  c.encoder.knn = 24;
  c.heads.frontier_scalar = 32;
  c.heads.frontier_vector = 8;
  c.heads.position_scalar = 32;
  c.heads.position_vector = 32;
  c.heads.field_scalar = 32;
  c.heads.field_vector = 8;
  c.heads.field_edge_scalar = 16;
  c.heads.field_edge_vector = 16;
  c.heads.field_knn = 16;
  c.heads.heads = 4;
  return c;
}

namespace {

ModelConfig gradient_model_config() {
  ModelConfig c;
  c.encoder.layers = 2;
  c.encoder.node_scalar = 16;
  c.encoder.node_vector = 8;
  c.encoder.edge_scalar = 8;
  c.encoder.edge_vector = 4;
  c.encoder.knn = 8;
  c.heads.frontier_scalar = 8;
  c.heads.frontier_vector = 4;
  c.heads.position_scalar = 8;
  c.heads.position_vector = 8;
  c.heads.field_scalar = 8;
  c.heads.field_vector = 4;
  c.heads.field_edge_scalar = 8;
  c.heads.field_edge_vector = 4;
  c.heads.field_knn = 8;
  c.heads.heads = 4;
  return c;
}

struct RandomContext {
  std::vector<Atom> pocket;
  MoleculeFragment fragment;
  std::vector<Vec3> queries;  // raw coordinates
};

RandomContext random_context(Rng& rng, int pocket_atoms, int fragment_atoms) {
  ToyConfig tc;
  tc.pocket_atoms = pocket_atoms;
  RandomContext ctx;
  ctx.fragment = random_ligand(rng, fragment_atoms, tc);
  ctx.pocket = random_pocket_around(ctx.fragment, rng, tc);
  for (int q = 0; q < 3; ++q) {
    const Vec3& a = ctx.fragment.atom(static_cast<int>(uniform_index(rng, ctx.fragment.size()))).coord;
    ctx.queries.push_back(a + Vec3{uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)});
  }
  return ctx;
}

RandomContext transform(const RandomContext& c, const std::array<Vec3, 3>& R, const Vec3& t) {
  RandomContext o;
  for (Atom a : c.pocket) {
    a.coord = pgen::apply(R, a.coord) + t;
    o.pocket.push_back(a);
  }
  for (const Atom& a : c.fragment.atoms()) o.fragment.add_atom(a.element, pgen::apply(R, a.coord) + t);
  for (const Bond& b : c.fragment.bonds()) o.fragment.add_bond(b.i, b.j, b.order);
  for (const Vec3& q : c.queries) o.queries.push_back(pgen::apply(R, q) + t);
  return o;
}

std::vector<double> to_vec(const Array<double>& a) { return a.data; }

std::vector<double> rotate_rows(const Array<double>& v, const std::array<Vec3, 3>& R) {
  std::vector<double> out(v.data.size());
  for (std::size_t i = 0; i + 2 < v.data.size(); i += 3) {
    const Vec3 r = pgen::apply(R, Vec3{v.data[i], v.data[i + 1], v.data[i + 2]});
    out[i] = r[0], out[i + 1] = r[1], out[i + 2] = r[2];
  }
  return out;
}

struct Outputs {
  std::vector<std::pair<std::string, Array<double>>> scalars, vectors;
};

Outputs collect(const Model<double>& model, const RandomContext& c) {
  Outputs out;
  const ContextGraph g = build_context(c.pocket, c.fragment, model.config().encoder.knn);
  Tape<double> tape(false);
  const Ctx<double> ctx = model.context(tape);
  const EncoderOutput<double> enc = model.encode(ctx, g);
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    out.scalars.emplace_back("encoder.layer" + std::to_string(l) + ".s", enc.layers[l].s.value());
    out.vectors.emplace_back("encoder.layer" + std::to_string(l) + ".v", enc.layers[l].v.value());
  }
  out.scalars.emplace_back("frontier.logits", model.frontier()(ctx, enc.nodes).value());
  const GmmVars<double> gmm = model.position()(ctx, enc.nodes);
  out.scalars.emplace_back("position.weights", gmm.logits.value());
  out.vectors.emplace_back("position.means", gmm.means.value());
  // Compared before the exp: the raw channels co-rotate, the variances do not.
  const Sv<double> hidden = model.position().mlp()(ctx, enc.nodes);
  out.vectors.emplace_back("position.log_variances", model.position().variance_head()(ctx, hidden).v.value());
  FieldQueries q;
  for (const Vec3& p : c.queries) {
    q.positions.push_back(g.center(p));
    q.with_bonds.push_back(1);
  }
  const FieldOutput<double> f = model.field()(ctx, g, enc.nodes, q);
  out.scalars.emplace_back("field.element_logits", f.element_logits.value());
  if (f.has_bonds) out.scalars.emplace_back("field.bond_logits", f.bond_logits.value());
  return out;
}

}  // namespace

SuiteReport equivariance_suite(int trials, std::uint64_t seed) {
  SuiteReport rep{"equivariance", {}};
  const Model<double> model(check_model_config(), seed);
  CheckLine inv{"scalar-invariance", 0, 1e-5, 0, 0};
  CheckLine cov{"vector-covariance", 0, 1e-5, 0, 0};
  Rng rng(seed ^ 0x65717569ULL);
  for (int t = 0; t < trials; ++t) {
    const RandomContext c = random_context(rng, 22, 8);
    const auto R = random_orthogonal(rng, t % 2 == 1);
    const Vec3 shift{uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10)};
    const Outputs a = collect(model, c);
    const Outputs b = collect(model, transform(c, R, shift));
    for (std::size_t i = 0; i < a.scalars.size(); ++i) {
      inv.max_error = std::max(inv.max_error, relative_block_error(to_vec(b.scalars[i].second),
                                                                   to_vec(a.scalars[i].second)));
      ++inv.checked;
    }
    for (std::size_t i = 0; i < a.vectors.size(); ++i) {
      cov.max_error = std::max(cov.max_error, relative_block_error(to_vec(b.vectors[i].second),
                                                                   rotate_rows(a.vectors[i].second, R)));
      ++cov.checked;
    }
  }
  rep.lines = {inv, cov};
  return rep;
}

SuiteReport attention_suite(int trials, std::uint64_t seed) {
  SuiteReport rep{"attention", {}};
  CheckLine wl{"weight-invariance", 0, 1e-10, 0, 0};
  CheckLine ol{"output-covariance", 0, 1e-8, 0, 0};
  Rng rng(seed ^ 0x617474ULL);
  const int heads = 4, channels = 8;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> offsets{0};
    const int segments = 1 + static_cast<int>(uniform_index(rng, 3));
    std::size_t pairs = 0;
    for (int s = 0; s < segments; ++s) {
      const int n = 1 + static_cast<int>(uniform_index(rng, 6));
      offsets.push_back(offsets.back() + n);
      pairs += static_cast<std::size_t>(n) * n;
    }
    const int rows = offsets.back();
    auto rnd = [&](int r, int c) {
      Array<double> a(r, c);
      for (double& x : a.data) x = standard_normal(rng);
      return a;
    };
    const Array<double> Q = rnd(rows, channels * 3), K = rnd(rows, channels * 3), V = rnd(rows, channels * 3);
    const Array<double> B = rnd(static_cast<int>(pairs), heads);
    const auto R = random_orthogonal(rng, t % 2 == 1);
    auto rot = [&](const Array<double>& a) {
      Array<double> o(a.rows, a.cols);
      o.data = rotate_rows(a, R);
      return o;
    };
    Array<double> w1, w2;
    Tape<double> tape(false);
    const Var<double> y1 = vector_attention(tape.constant(Q), tape.constant(K), tape.constant(V), tape.constant(B),
                                            offsets, heads, &w1);
    const Var<double> y2 = vector_attention(tape.constant(rot(Q)), tape.constant(rot(K)), tape.constant(rot(V)),
                                            tape.constant(B), offsets, heads, &w2);
    double wd = 0;
    for (std::size_t i = 0; i < w1.data.size(); ++i) wd = std::max(wd, std::abs(w1.data[i] - w2.data[i]));
    wl.max_error = std::max(wl.max_error, wd);
    ++wl.checked;
    ol.max_error = std::max(ol.max_error, relative_block_error(y2.value().data, rotate_rows(y1.value(), R)));
    ++ol.checked;
  }
  rep.lines = {wl, ol};
  return rep;
}

namespace {

Array<double> random_array(Rng& rng, int r, int c) {
  Array<double> a(r, c);
  for (double& x : a.data) x = standard_normal(rng);
  return a;
}

// Root = sum of the outputs weighted by fixed random coefficients.
Var<double> project(Tape<double>& t, const Sv<double>& x, const Array<double>& ws, const Array<double>& wv) {
  return ad::add(ad::sum_all(ad::mul(x.s, t.constant(ws))), ad::sum_all(ad::mul(x.v, t.constant(wv))));
}

struct SvParams {
  ParamId s, v;
};

SvParams add_input(ParamStore<double>& store, const std::string& name, int rows, int s, int v, Rng& rng) {
  SvParams p{store.add(name + ".s", rows, s), store.add(name + ".v", rows, v * 3)};
  store.entry(p.s).value = random_array(rng, rows, s);
  store.entry(p.v).value = random_array(rng, rows, v * 3);
  return p;
}

Sv<double> input(Ctx<double>& ctx, const SvParams& p) { return {ctx.p(p.s), ctx.p(p.v)}; }

void merge(CheckLine& into, const CheckLine& l) {
  into.max_error = std::max(into.max_error, l.max_error);
  into.checked += l.checked;
  into.skipped += l.skipped;
  into.refined += l.refined;
}

}  // namespace

SuiteReport gradient_suite(int trials, std::uint64_t seed) {
  SuiteReport rep{"gradients", {}};
  FdOptions full;
  FdOptions sampled;
  sampled.entries_per_param = 2;
  const int rows = 5;

  auto block_check = [&](const std::string& name, GvpKind kind, bool mlp) {
    CheckLine line{name, 0, 1e-4, 0, 0};
    for (int t = 0; t < trials; ++t) {
      Rng rng(seed + 1000003ULL * t + std::hash<std::string>{}(name));
      ParamStore<double> store;
      const SvParams in = add_input(store, "x", rows, 4, 3, rng);
      GvpBlock<double> block;
      GvMlp<double> stack;
      if (mlp)
        stack = GvMlp<double>(store, "mlp", 4, 3, 5, 4, 3, 2, 0.2, rng);
      else
        block = GvpBlock<double>(store, "gvp", GvpConfig{4, 3, 3, 2, 0, 0.2}, kind, rng);
      for (auto& e : store.entries())
        if (e.name.ends_with(".b3") || e.name.ends_with(".bg")) e.value = random_array(rng, e.value.rows, e.value.cols);
      const Array<double> ws = random_array(rng, rows, 3), wv = random_array(rng, rows, 6);
      auto root = [&](Tape<double>& tape) {
        Ctx<double> ctx{tape, store};
        Sv<double> y = mlp ? stack(ctx, input(ctx, in)) : block(ctx, input(ctx, in));
        return project(tape, y, ws, wv);
      };
      merge(line, finite_difference_check(name, store, root, rng, full));
    }
    rep.lines.push_back(line);
  };
  block_check("gvp", GvpKind::Original, false);
  block_check("g_per", GvpKind::Perceptron, false);
  block_check("g_lin", GvpKind::Linear, false);
  block_check("g_mlp", GvpKind::Linear, true);

  {
    CheckLine line{"message", 0, 1e-4, 0, 0};
    CheckLine upd{"update", 0, 1e-4, 0, 0};
    for (int t = 0; t < trials; ++t) {
      Rng rng(seed + 7919ULL * t + 11);
      ParamStore<double> store;
      const int nodes = 4, edges = 6;
      const SvParams nin = add_input(store, "node", nodes, 5, 3, rng);
      const SvParams ein = add_input(store, "edge", edges, 4, 2, rng);
      MessageModule<double> msg(store, "msg", MessageWidths{5, 3, 4, 2, 5, 3}, 0.2, rng);
      std::vector<int> sender(edges), dest(edges);
      for (int e = 0; e < edges; ++e) {
        sender[e] = static_cast<int>(uniform_index(rng, nodes));
        dest[e] = e % nodes;
      }
      const Array<double> ws = random_array(rng, edges, 5), wv = random_array(rng, edges, 9);
      merge(line, finite_difference_check("message", store, [&](Tape<double>& tape) {
        Ctx<double> ctx{tape, store};
        return project(tape, msg(ctx, input(ctx, nin), input(ctx, ein), sender), ws, wv);
      }, rng, full));

      ParamStore<double> store2;
      EncoderConfig ec;
      ec.layers = 1;
      ec.node_scalar = 5;
      ec.node_vector = 3;
      ec.edge_scalar = 4;
      ec.edge_vector = 2;
      const SvParams h = add_input(store2, "node", nodes, 5, 3, rng);
      const SvParams m = add_input(store2, "msg", edges, 5, 3, rng);
      Encoder<double> enc(store2, "enc", ec, rng);
      const Array<double> us = random_array(rng, nodes, 5), uv = random_array(rng, nodes, 9);
      merge(upd, finite_difference_check("update", store2, [&](Tape<double>& tape) {
        Ctx<double> ctx{tape, store2};
        return project(tape, enc.aggregate_and_update(ctx, 0, input(ctx, h), input(ctx, m), dest), us, uv);
      }, rng, full));
    }
    rep.lines.push_back(line);
    rep.lines.push_back(upd);
  }

  {
    CheckLine enc_line{"encoder", 0, 1e-4, 0, 0};
    CheckLine fro{"frontier-head", 0, 1e-4, 0, 0};
    CheckLine pos{"position-head", 0, 1e-4, 0, 0};
    CheckLine fld{"element-bond-head", 0, 1e-4, 0, 0};
    CheckLine loss{"total-loss", 0, 1e-4, 0, 0};
    for (int t = 0; t < trials; ++t) {
      Rng rng(seed + 104729ULL * t + 5);
      Model<double> model(gradient_model_config(), seed + t);
      ParamStore<double>& store = model.store();
      for (auto& e : store.entries())
        if (e.name.ends_with(".b3") || e.name.ends_with(".bg") || e.name.ends_with(".b"))
          for (double& x : e.value.data) x = 0.1 * standard_normal(rng);
      const RandomContext c = random_context(rng, 14, 6);
      const ContextGraph g = build_context(c.pocket, c.fragment, model.config().encoder.knn);
      const int n = g.size();
      const Array<double> ws = random_array(rng, n, model.config().encoder.node_scalar);
      const Array<double> wv = random_array(rng, n, model.config().encoder.node_vector * 3);
      merge(enc_line, finite_difference_check("encoder", store, [&](Tape<double>& tape) {
        const Ctx<double> ctx = model.context(tape);
        return project(tape, model.encode(ctx, g).nodes, ws, wv);
      }, rng, sampled));

      const Array<double> wf = random_array(rng, n, 1);
      merge(fro, finite_difference_check("frontier", store, [&](Tape<double>& tape) {
        const Ctx<double> ctx = model.context(tape);
        return ad::sum_all(ad::mul(model.frontier()(ctx, model.encode(ctx, g).nodes), tape.constant(wf)));
      }, rng, sampled));

      Array<double> offs = random_array(rng, n, 3);
      merge(pos, finite_difference_check("position", store, [&](Tape<double>& tape) {
        const Ctx<double> ctx = model.context(tape);
        const GmmVars<double> gm = model.position()(ctx, model.encode(ctx, g).nodes);
        return ad::mean_all(gmm_log_pdf(gm, tape.constant(offs)));
      }, rng, sampled));

      FieldQueries q;
      std::vector<int> el;
      for (const Vec3& p : c.queries) {
        q.positions.push_back(g.center(p));
        q.with_bonds.push_back(1);
        el.push_back(static_cast<int>(uniform_index(rng, kNumElementClasses)));
      }
      std::vector<int> bl(q.positions.size() * static_cast<std::size_t>(g.num_fragment()));
      for (int& b : bl) b = static_cast<int>(uniform_index(rng, kNumBondClasses));
      merge(fld, finite_difference_check("field", store, [&](Tape<double>& tape) {
        const Ctx<double> ctx = model.context(tape);
        const FieldOutput<double> f = model.field()(ctx, g, model.encode(ctx, g).nodes, q);
        return ad::add(ad::cross_entropy(f.element_logits, std::span<const int>(el), 1e-7),
                       ad::cross_entropy(f.bond_logits, std::span<const int>(bl), 1e-7));
      }, rng, sampled));

      PocketLigandPair pair{c.pocket, c.fragment};
      TrainingExample ex;
      do {
        ex = make_training_example(pair.pocket, pair.ligand, rng);
      } while (ex.targets.empty());
      merge(loss, finite_difference_check("loss", store, [&](Tape<double>& tape) {
        const Ctx<double> ctx = model.context(tape);
        return compute_losses(model, ctx, ex).total;
      }, rng, sampled));
    }
    rep.lines.insert(rep.lines.end(), {enc_line, fro, pos, fld, loss});
  }
  return rep;
}

SuiteReport gmm_suite(int trials, std::uint64_t seed) {
  SuiteReport rep{"gmm", {}};
  Rng rng(seed ^ 0x676d6dULL);
  {
    const GmmParams unit{{1.0}, {Vec3{0, 0, 0}}, {Vec3{1, 1, 1}}};
    const double v = gmm_log_pdf(unit, {0, 0, 0});
    rep.lines.push_back({"unit-density-at-mean", std::abs(v + 1.5 * std::log(2 * std::numbers::pi)), 1e-10, 1, 0});
  }
  auto random_gmm = [&] {
    GmmParams g;
    double z = 0;
    for (int k = 0; k < 3; ++k) {
      const double w = 0.2 + uniform01(rng);
      g.weights.push_back(w);
      z += w;
      g.means.push_back({uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)});
      g.variances.push_back({uniform(rng, 0.2, 2), uniform(rng, 0.2, 2), uniform(rng, 0.2, 2)});
    }
    for (double& w : g.weights) w /= z;
    return g;
  };
  CheckLine naive{"log-sum-exp-vs-naive", 0, 1e-10, 0, 0};
  CheckLine weights{"sample-weights", 0, 0.02, 0, 0};
  CheckLine means{"sample-means-sigma", 0, 3.0, 0, 0};
  CheckLine norm_line{"normalization", 0, 0.02, 0, 0};
  const int draws = 100000;
  for (int t = 0; t < trials; ++t) {
    const GmmParams g = random_gmm();
    for (int i = 0; i < 20; ++i) {
      const Vec3 x{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)};
      double direct = 0;
      for (int k = 0; k < 3; ++k) {
        double p = g.weights[k];
        for (int a = 0; a < 3; ++a) {
          const double d = x[a] - g.means[k][a];
          p *= std::exp(-0.5 * d * d / g.variances[k][a]) / std::sqrt(2 * std::numbers::pi * g.variances[k][a]);
        }
        direct += p;
      }
      naive.max_error = std::max(naive.max_error, std::abs(gmm_log_pdf(g, x) - std::log(direct))
                                                      / std::max(1.0, std::abs(std::log(direct))));
      ++naive.checked;
    }
    if (t == 0) {
      std::vector<int> count(3, 0);
      std::vector<Vec3> sum(3, Vec3{0, 0, 0});
      for (int i = 0; i < draws; ++i) {
        int k = 0;
        const Vec3 x = gmm_sample(g, rng, &k);
        ++count[k];
        sum[k] = sum[k] + x;
      }
      for (int k = 0; k < 3; ++k) {
        weights.max_error = std::max(weights.max_error, std::abs(count[k] / static_cast<double>(draws) - g.weights[k]));
        for (int a = 0; a < 3; ++a) {
          const double m = sum[k][a] / count[k];
          const double se = std::sqrt(g.variances[k][a] / count[k]);
          means.max_error = std::max(means.max_error, std::abs(m - g.means[k][a]) / se);
        }
      }
      ++weights.checked;
      ++means.checked;
    }
    if (t < 3) {
      // Importance sampling from a broad Gaussian covering every component.
      Vec3 centre{0, 0, 0}, sd{0, 0, 0};
      for (int k = 0; k < 3; ++k) centre = centre + g.weights[k] * g.means[k];
      for (int a = 0; a < 3; ++a) {
        double s = 0;
        for (int k = 0; k < 3; ++k)
          s = std::max(s, g.variances[k][a] + (g.means[k][a] - centre[a]) * (g.means[k][a] - centre[a]));
        sd[a] = 1.5 * std::sqrt(s);
      }
      const int samples = 1000000;
      double acc = 0;
      for (int i = 0; i < samples; ++i) {
        Vec3 x;
        double logq = 0;
        for (int a = 0; a < 3; ++a) {
          const double z = standard_normal(rng);
          x[a] = centre[a] + sd[a] * z;
          logq += -0.5 * z * z - std::log(sd[a]) - 0.5 * std::log(2 * std::numbers::pi);
        }
        acc += std::exp(gmm_log_pdf(g, x) - logq);
      }
      norm_line.max_error = std::max(norm_line.max_error, std::abs(acc / samples - 1.0));
      ++norm_line.checked;
    }
  }
  rep.lines.insert(rep.lines.end(), {naive, weights, means, norm_line});
  return rep;
}

}  // namespace pgen
