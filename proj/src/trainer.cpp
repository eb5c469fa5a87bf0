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

#include "pgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pgen/ops.hpp"

namespace pgen {

namespace {

Vec3 random_unit(Rng& rng) {
  // Normal draws give an isotropic direction.
  for (;;) {
    Vec3 v{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    const double n = norm(v);
    if (n > 1e-12) return (1.0 / n) * v;
  }
}

Vec3 jitter(Rng& rng, double sd) {
  if (sd == 0) return {0, 0, 0};
  return Vec3{sd * standard_normal(rng), sd * standard_normal(rng), sd * standard_normal(rng)};
}

bool clear_of(const Vec3& p, const std::vector<Atom>& pocket, const MoleculeFragment& ligand,
              double clearance) {
  for (const Atom& a : pocket)
    if (distance(a.coord, p) < clearance) return false;
  for (const Atom& a : ligand.atoms())
    if (distance(a.coord, p) < clearance) return false;
  return true;
}

}  // namespace

TrainingExample make_training_example(const std::vector<Atom>& pocket, const MoleculeFragment& ligand,
                                      Rng& rng, const MaskingConfig& cfg) {
  const int n = ligand.size();
  if (n == 0) throw std::invalid_argument("make_training_example: empty molecule");
  if (pocket.empty()) throw std::invalid_argument("make_training_example: empty pocket");

  TrainingExample ex;
  ex.pocket = &pocket;
  const double ratio = uniform01(rng);
  const int masked = std::clamp(static_cast<int>(std::ceil(ratio * n)), 1, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  // Partial Fisher-Yates: the first `masked` entries are a uniform subset.
  for (int i = 0; i < masked; ++i) {
    const int j = i + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - i)));
    std::swap(order[i], order[j]);
  }
  std::vector<char> is_masked(n, 0);
  for (int i = 0; i < masked; ++i) is_masked[order[i]] = 1;
  for (int i = 0; i < n; ++i) (is_masked[i] ? ex.masked_index : ex.visible_index).push_back(i);
  ex.visible = ligand.subset(ex.visible_index);

  const int np = static_cast<int>(pocket.size());
  std::vector<int> local(n, -1);
  for (std::size_t v = 0; v < ex.visible_index.size(); ++v) local[ex.visible_index[v]] = static_cast<int>(v);

  std::vector<int> anchors;  // context nodes that negatives are drawn around
  if (!ex.fully_masked()) {
    for (std::size_t v = 0; v < ex.visible_index.size(); ++v) {
      bool frontier = false;
      for (const auto& [nb, order_] : ligand.neighbors(ex.visible_index[v]))
        if (is_masked[nb]) frontier = true;
      ex.frontier_nodes.push_back(np + static_cast<int>(v));
      ex.frontier_labels.push_back(frontier ? 1 : 0);
      anchors.push_back(np + static_cast<int>(v));
    }
    for (int m : ex.masked_index) {
      std::vector<int> focal;
      for (const auto& [nb, order_] : ligand.neighbors(m))
        if (!is_masked[nb]) focal.push_back(np + local[nb]);
      if (focal.empty()) continue;
      std::sort(focal.begin(), focal.end());
      TrainingTarget t;
      t.ligand_index = m;
      t.focal = focal[uniform_index(rng, focal.size())];
      t.delta = ligand.atom(m).coord - ex.visible.atom(t.focal - np).coord;
      t.query = jitter(rng, cfg.query_jitter);
      t.element = ligand.atom(m).element;
      t.bonds.resize(ex.visible_index.size(), BondOrder::None);
      for (std::size_t v = 0; v < ex.visible_index.size(); ++v)
        t.bonds[v] = ligand.bond(m, ex.visible_index[v]);
      ex.targets.push_back(std::move(t));
    }
  } else {
    std::vector<char> label(np, 0);
    for (int p = 0; p < np; ++p)
      for (const Atom& a : ligand.atoms())
        if (distance(pocket[p].coord, a.coord) <= cfg.first_atom_radius) label[p] = 1;
    for (int m = 0; m < n; ++m) {
      std::vector<int> focal;
      for (int p = 0; p < np; ++p)
        if (distance(pocket[p].coord, ligand.atom(m).coord) <= cfg.first_atom_radius) focal.push_back(p);
      if (focal.empty()) continue;
      TrainingTarget t;
      t.ligand_index = m;
      t.focal = focal[uniform_index(rng, focal.size())];
      t.delta = ligand.atom(m).coord - pocket[t.focal].coord;
      t.query = jitter(rng, cfg.query_jitter);
      t.element = ligand.atom(m).element;
      ex.targets.push_back(std::move(t));
    }
    if (ex.targets.empty()) {
      // Ligand entirely beyond the radius: supervise its closest atom from
      // the closest pocket atom instead.
      double best = std::numeric_limits<double>::infinity();
      int bm = 0, bp = 0;
      for (int m = 0; m < n; ++m)
        for (int p = 0; p < np; ++p) {
          const double d = distance(pocket[p].coord, ligand.atom(m).coord);
          if (d < best) best = d, bm = m, bp = p;
        }
      label[bp] = 1;
      TrainingTarget t;
      t.ligand_index = bm;
      t.focal = bp;
      t.delta = ligand.atom(bm).coord - pocket[bp].coord;
      t.query = jitter(rng, cfg.query_jitter);
      t.element = ligand.atom(bm).element;
      ex.targets.push_back(std::move(t));
    }
    for (int p = 0; p < np; ++p) {
      ex.frontier_nodes.push_back(p);
      ex.frontier_labels.push_back(label[p]);
      if (label[p]) anchors.push_back(p);
    }
  }

  const double r3_in = std::pow(cfg.negative_inner, 3), r3_out = std::pow(cfg.negative_outer, 3);
  for (std::size_t t = 0; t < ex.targets.size(); ++t) {
    for (int attempt = 0; attempt < cfg.negative_attempts; ++attempt) {
      const int a = anchors[uniform_index(rng, anchors.size())];
      const Vec3 centre = a < np ? pocket[a].coord : ex.visible.atom(a - np).coord;
      // Uniform in the shell volume: radius from the inverse cube CDF.
      const double r = std::cbrt(r3_in + (r3_out - r3_in) * uniform01(rng));
      const Vec3 p = centre + r * random_unit(rng);
      if (clear_of(p, pocket, ligand, cfg.negative_clearance)) {
        ex.negatives.push_back(p);
        break;
      }
    }
  }
  return ex;
}

template <class T>
Losses<T> compute_losses(const Model<T>& model, const Ctx<T>& ctx, const TrainingExample& ex, T clip) {
  if (ex.pocket == nullptr) throw std::invalid_argument("compute_losses: example has no pocket");
  if (ex.targets.empty()) throw std::invalid_argument("compute_losses: example has no targets");
  const ContextGraph graph = build_context(*ex.pocket, ex.visible, model.config().encoder.knn);
  const EncoderOutput<T> enc = model.encode(ctx, graph);
  Losses<T> out;

  Var<T> fl = model.frontier()(ctx, Sv<T>{ad::gather_rows(enc.nodes.s, ex.frontier_nodes),
                                          ad::gather_rows(enc.nodes.v, ex.frontier_nodes)});
  std::vector<T> labels(ex.frontier_labels.begin(), ex.frontier_labels.end());
  out.frontier = ad::bce_with_logits(fl, std::span<const T>(labels), clip);

  const int nt = static_cast<int>(ex.targets.size());
  std::vector<int> focal(nt);
  Array<T> delta(nt, 3);
  FieldQueries queries;
  std::vector<int> element_labels;
  for (int t = 0; t < nt; ++t) {
    const TrainingTarget& tg = ex.targets[t];
    focal[t] = tg.focal;
    for (int a = 0; a < 3; ++a) delta(t, a) = static_cast<T>(tg.delta[a]);
    queries.positions.push_back(graph.coords[tg.focal] + tg.delta + tg.query);
    queries.with_bonds.push_back(1);
    element_labels.push_back(static_cast<int>(tg.element));
  }
  for (const Vec3& p : ex.negatives) {
    queries.positions.push_back(graph.center(p));
    queries.with_bonds.push_back(0);
    element_labels.push_back(static_cast<int>(Element::Nothing));
  }

  GmmVars<T> gmm = model.position()(ctx, Sv<T>{ad::gather_rows(enc.nodes.s, focal),
                                               ad::gather_rows(enc.nodes.v, focal)});
  out.position = ad::scale(ad::mean_all(gmm_log_pdf(gmm, ctx.tape.constant(std::move(delta)))), T(-1));

  FieldOutput<T> field = model.field()(ctx, graph, enc.nodes, queries);
  out.element = ad::cross_entropy(field.element_logits, std::span<const int>(element_labels), clip);
  if (field.has_bonds) {
    std::vector<int> bond_labels(field.bond_query.size());
    for (std::size_t p = 0; p < bond_labels.size(); ++p)
      bond_labels[p] = static_cast<int>(ex.targets[field.bond_query[p]].bonds[field.bond_atom[p]]);
    out.bond = ad::cross_entropy(field.bond_logits, std::span<const int>(bond_labels), clip);
  } else {
    out.bond = ctx.tape.constant(Array<T>(1, 1));
  }
  out.total = ad::add(ad::add(out.frontier, out.position), ad::add(out.element, out.bond));
  return out;
}

void TrainerConfig::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("trainer lr must be positive");
  if (!(max_grad_norm >= 0)) throw std::invalid_argument("trainer max_grad_norm must be non-negative");
  if (batch < 1) throw std::invalid_argument("trainer batch must be at least 1");
  if (!(decay > 0 && decay <= 1)) throw std::invalid_argument("trainer decay must be in (0, 1]");
  if (patience < 1) throw std::invalid_argument("trainer patience must be at least 1");
  if (validation_interval < 1) throw std::invalid_argument("validation interval must be at least 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (checkpoint_interval < 0 || log_interval < 0)
    throw std::invalid_argument("intervals must be non-negative");
  if (validation_examples < 1) throw std::invalid_argument("validation needs at least one example per pair");
}

bool PlateauSchedule::observe(double validation_loss, double decay, int patience) {
  if (!has_best || validation_loss < best) {
    best = validation_loss;
    has_best = true;
    bad = 0;
    return false;
  }
  if (++bad < patience) return false;
  lr *= decay;
  bad = 0;
  ++decays;
  return true;
}

double validation_loss(const Model<float>& model, const std::vector<PocketLigandPair>& pairs,
                       const TrainerConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("validation needs at least one pair");
  double total = 0;
  int count = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      0x76616cu, static_cast<std::uint32_t>(p)};
    Rng rng(seq);
    for (int e = 0; e < cfg.validation_examples; ++e) {
      TrainingExample ex = make_training_example(pairs[p].pocket, pairs[p].ligand, rng, cfg.masking);
      Tape<float> tape(false);
      auto model_ctx = model.context(tape);
      Losses<float> l = compute_losses(model, model_ctx, ex);
      total += l.value(l.total);
      ++count;
    }
  }
  return total / count;
}

TrainingState train(Model<float>& model, const std::vector<PocketLigandPair>& train_pairs,
                    const std::vector<PocketLigandPair>& validation_pairs, const TrainerConfig& cfg,
                    const TrainHooks& hooks, std::optional<TrainingState> resume) {
  cfg.validate();
  if (train_pairs.empty()) throw std::invalid_argument("training needs at least one pair");
  const auto& val = validation_pairs.empty() ? train_pairs : validation_pairs;

  TrainingState state;
  Rng rng(cfg.seed);
  if (resume) {
    state = *resume;
    std::istringstream in(state.rng_state);
    in >> rng;
    if (!in) throw std::invalid_argument("resume state has an unreadable rng state");
  } else {
    state.schedule.lr = cfg.lr;
  }
  auto save_rng = [&] {
    std::ostringstream os;
    os << rng;
    state.rng_state = os.str();
  };
  std::ostream* log = hooks.log;
  if (log) *log << std::setprecision(6);

  ParamStore<float>& store = model.store();
  while (state.iteration < cfg.iterations) {
    const long it = state.iteration + 1;
    double sum[5] = {0, 0, 0, 0, 0};
    try {
      for (int b = 0; b < cfg.batch; ++b) {
        const auto& pair = train_pairs[uniform_index(rng, train_pairs.size())];
        TrainingExample ex = make_training_example(pair.pocket, pair.ligand, rng, cfg.masking);
        Tape<float> tape(true);
        Ctx<float> ctx = model.context(tape);
        Losses<float> l = compute_losses(model, ctx, ex);
        tape.backward(l.total, 1.0f / static_cast<float>(cfg.batch));
        sum[0] += l.value(l.frontier);
        sum[1] += l.value(l.position);
        sum[2] += l.value(l.element);
        sum[3] += l.value(l.bond);
        sum[4] += l.value(l.total);
      }
      for (double& s : sum) s /= cfg.batch;
      if (!std::isfinite(sum[4])) throw TrainingError(it, "non-finite loss");
      clip_grad_norm(store, cfg.max_grad_norm);
      adam_step(store, AdamConfig{state.schedule.lr, cfg.beta1, cfg.beta2, cfg.eps});
    } catch (const NumericFault& f) {
      throw TrainingError(it, f.what());
    }
    state.iteration = it;
    if (!state.has_initial_loss) {
      state.initial_loss = sum[4];
      state.has_initial_loss = true;
    }
    if (log && cfg.log_interval > 0 && (it % cfg.log_interval == 0 || it == 1))
      *log << "iter " << it << " total " << sum[4] << " frontier " << sum[0] << " position "
           << sum[1] << " element " << sum[2] << " bond " << sum[3] << " lr " << state.schedule.lr
           << '\n';
    if (it % cfg.validation_interval == 0) {
      const double v = validation_loss(model, val, cfg);
      state.validation_history.push_back(v);
      const bool decayed = state.schedule.observe(v, cfg.decay, cfg.patience);
      if (log) {
        *log << "validation " << it << " loss " << v << " lr " << state.schedule.lr
             << (decayed ? " decayed" : "") << '\n';
        log->flush();
      }
    }
    if (hooks.checkpoint && cfg.checkpoint_interval > 0 && it % cfg.checkpoint_interval == 0
        && it != cfg.iterations) {
      save_rng();
      hooks.checkpoint(model, state);
    }
  }
  save_rng();
  if (hooks.checkpoint) hooks.checkpoint(model, state);
  return state;
}

template Losses<float> compute_losses(const Model<float>&, const Ctx<float>&, const TrainingExample&, float);
template Losses<double> compute_losses(const Model<double>&, const Ctx<double>&, const TrainingExample&,
                                       double);

}  // namespace pgen
