#pragma once

// The full tree model: per-level coarsening + perturbation + routing along
// the selected root-to-leaf path, classification readout, combined loss,
// variants, Adam training, and explanation traces.

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tif/coarsening.hpp"
#include "tif/graph.hpp"
#include "tif/params.hpp"
#include "tif/perturbation.hpp"
#include "tif/routing.hpp"
#include "tif/rng.hpp"

namespace tif {

enum class VariantProfile { Full, BiTree, NoIar, NoPm, Sv };

inline const char* variant_name(VariantProfile v) {
  switch (v) {
    case VariantProfile::Full: return "full";
    case VariantProfile::BiTree: return "bitree";
    case VariantProfile::NoIar: return "no-iar";
    case VariantProfile::NoPm: return "no-pm";
    case VariantProfile::Sv: return "sv";
  }
  return "full";
}

struct TifConfig {
  int levels = 2;        // L
  int branches = 4;      // M
  double q = 0.2;        // compression ratio
  int hidden = 64;       // d
  int feature_dim = 10;  // d0
  int classes = 2;       // C
  int k_max = 64;
  int gcn_layers = 2;
  int router_hidden = 32;
  double alpha1 = 0.3, alpha2 = 0.2, alpha3 = 0.1;
  double lr = 0.01;
  int batch = 32;
  int epochs = 200;
  uint64_t seed = 1;
  int threads = 1;
  RouterVariant router_variant = RouterVariant::Mlp;
  PerturbSpace perturb_space = PerturbSpace::Logit;
  bool gate = true;          // multiply selected branch by its routing prob
  int entropy_sign = -1;     // -1: reward exploration; +1: literal equation
  bool literal_eq9 = false;  // raw squared-distance diversity term
  bool link_all_levels = true;
  double perturb_lambda = 0.1, perturb_mu = 0.1, perturb_margin = 1.0;
  VariantProfile profile = VariantProfile::Full;

  // Resolves the variant profile into concrete switches.
  void apply_profile() {
    switch (profile) {
      case VariantProfile::Full:
        break;
      case VariantProfile::BiTree:
        branches = 2;
        router_variant = RouterVariant::Linear;
        break;
      case VariantProfile::NoIar:
        router_variant = RouterVariant::Linear;
        break;
      case VariantProfile::NoPm:
      case VariantProfile::Sv:
        break;
    }
  }

  void validate() const {
    if (levels < 1) throw std::invalid_argument("config: levels must be >= 1");
    if (branches < 2) throw std::invalid_argument("config: branches must be >= 2");
    if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("config: q must be in (0,1)");
    if (alpha1 < 0 || alpha2 < 0 || alpha3 < 0)
      throw std::invalid_argument("config: loss weights must be >= 0");
    if (classes < 2) throw std::invalid_argument("config: classes must be >= 2");
  }
};

struct TraceLevel {
  int selected = 0;
  std::vector<double> probs;
  Matrix assignment;  // selected branch's S
  Graph coarse;       // cumulative coarsening of the raw graph
};

struct TreeTrace {
  std::vector<TraceLevel> levels;
  int pred = 0;
  std::vector<double> probs;

  std::string path_id() const {
    std::string s;
    for (const auto& l : levels) {
      if (!s.empty()) s += '-';
      s += std::to_string(l.selected);
    }
    return s;
  }
};

struct ForwardResult {
  Tensor class_probs;  // 1 x C
  Tensor link_loss;
  Tensor perturb_loss;
  Tensor similarity_loss;
  Tensor diversity_loss;
  Tensor entropy;
  int routers_fired = 0;
  TreeTrace trace;
};

class TifModel {
 public:
  TifConfig config;
  ParamStore params;

  static TifModel create(TifConfig cfg) {
    cfg.apply_profile();
    cfg.validate();
    TifModel m;
    m.config = cfg;
    Rng rng(cfg.seed);
    bool shared = cfg.profile == VariantProfile::BiTree || cfg.profile == VariantProfile::Sv;
    bool frozen = cfg.profile == VariantProfile::BiTree || cfg.profile == VariantProfile::NoPm;
    bool zero_init = cfg.profile == VariantProfile::NoPm;

    int positions = 1;
    for (int l = 0; l < cfg.levels; ++l) {
      Level lvl;
      std::string lp = "L" + std::to_string(l);
      int d_in = l == 0 ? cfg.feature_dim : cfg.hidden;
      lvl.gcn = GcnStack::create(m.params, rng, lp + ".gcn", d_in, cfg.hidden, cfg.gcn_layers);
      lvl.head = AssignmentHead::create(m.params, rng, lp + ".head", cfg.hidden, cfg.k_max);
      int perturb_sets = shared ? 1 : positions;
      for (int p = 0; p < perturb_sets; ++p) {
        auto ps = PerturbationSet::create(m.params, rng, lp + ".pos" + std::to_string(p),
                                          cfg.branches, cfg.k_max, !frozen, zero_init);
        ps.space = cfg.perturb_space;
        ps.lambda = cfg.perturb_lambda;
        ps.mu = cfg.perturb_mu;
        ps.margin = cfg.perturb_margin;
        ps.losses_enabled = cfg.profile != VariantProfile::NoPm;
        lvl.perturbs.push_back(ps);
      }
      for (int p = 0; p < positions; ++p)
        lvl.routers.push_back(Router::create(m.params, rng,
                                             lp + ".router" + std::to_string(p),
                                             cfg.branches * cfg.hidden, cfg.router_hidden,
                                             cfg.branches, cfg.router_variant));
      m.levels_.push_back(std::move(lvl));
      positions *= cfg.branches;
    }
    m.readout_w_ = m.params.add("readout.w", rng.glorot_matrix(cfg.hidden, cfg.classes));
    m.readout_b_ = m.params.add("readout.b", Matrix(1, cfg.classes));
    return m;
  }

  ForwardResult forward(Tape& tape, const ParamBinding& bind, const Graph& g) const {
    if (g.features.cols != config.feature_dim)
      throw std::invalid_argument("forward: feature width does not match config");
    ForwardResult fr;
    Tensor a = tape.leaf(g.adjacency);
    Tensor x = tape.leaf(g.features);
    Tensor zero = tape.leaf(Matrix(1, 1));
    fr.link_loss = zero;
    fr.perturb_loss = zero;
    fr.similarity_loss = zero;
    fr.diversity_loss = zero;
    std::vector<RoutingDecision> decisions;
    std::vector<Matrix> chain;  // selected assignments so far, by value
    int pos = 0;
    int n = g.n;

    for (size_t l = 0; l < levels_.size(); ++l) {
      const Level& lvl = levels_[l];
      Tensor norm_adj = normalize_on_tape(tape, a, n);
      Tensor z = lvl.gcn.forward(tape, bind, norm_adj, x);
      Tensor logits = lvl.head.logits(tape, bind, z);
      int k = cluster_count(config.q, n, config.k_max);

      const PerturbationSet& ps = lvl.perturbs[lvl.perturbs.size() == 1 ? 0 : pos];
      std::vector<Tensor> branches = ps.perturb_assignments(tape, bind, logits, k);
      std::vector<Tensor> branch_x;
      std::vector<Tensor> branch_a;
      branch_x.reserve(branches.size());
      branch_a.reserve(branches.size());
      for (Tensor s : branches) {
        auto [px, pa] = pool(tape, z, a, s);
        branch_x.push_back(px);
        branch_a.push_back(pa);
      }

      if (ps.losses_enabled) {
        Tensor base_s = tape.row_softmax(tape.slice_cols(logits, 0, k));
        Tensor base_x = tape.matmul(tape.transpose(base_s), z);
        PerturbLosses pl = config.literal_eq9
                               ? perturb_losses_literal(tape, ps, branch_x, base_x)
                               : perturb_losses(tape, ps, branch_x, base_x);
        fr.similarity_loss = tape.add(fr.similarity_loss, pl.similarity);
        fr.diversity_loss = tape.add(fr.diversity_loss, pl.diversity);
        fr.perturb_loss = tape.add(fr.perturb_loss, pl.total);
      }

      Tensor summary = summarize_branches(tape, branch_x);
      RoutingDecision dec = route(tape, bind, lvl.routers[pos], summary);
      decisions.push_back(dec);

      Tensor s_sel = branches[dec.selected];
      Tensor x_sel = branch_x[dec.selected];
      Tensor a_sel = branch_a[dec.selected];
      if (config.gate) {
        Tensor gate = selection_gate(tape, dec);
        x_sel = tape.mul(x_sel, tape.scalar_expand(gate, x_sel.rows(), x_sel.cols()));
      }

      if (config.link_all_levels || l == 0) {
        Tensor a01 = l == 0 ? a : rescale_01(tape, a);
        fr.link_loss = tape.add(fr.link_loss, link_loss(tape, a01, s_sel));
      }

      TraceLevel tl;
      tl.selected = dec.selected;
      const Matrix& pv = dec.probabilities.value();
      tl.probs.assign(pv.data.begin(), pv.data.end());
      tl.assignment = s_sel.value();
      chain.push_back(tl.assignment);
      tl.coarse = coarsen_raw(g, chain);
      fr.trace.levels.push_back(std::move(tl));

      pos = pos * config.branches + dec.selected;
      a = a_sel;
      x = x_sel;
      n = k;
    }

    fr.entropy = routing_entropy(tape, decisions);
    fr.routers_fired = static_cast<int>(decisions.size());

    Tensor pooled = tape.mean_rows(x);  // 1 x d
    Tensor logits_c = tape.add(tape.matmul(pooled, bind[readout_w_]), bind[readout_b_]);
    fr.class_probs = tape.row_softmax(logits_c);

    const Matrix& cp = fr.class_probs.value();
    fr.trace.probs.assign(cp.data.begin(), cp.data.end());
    fr.trace.pred = 0;
    for (int i = 1; i < cp.cols; ++i)
      if (cp.at(0, i) > cp.at(0, fr.trace.pred)) fr.trace.pred = i;
    return fr;
  }

  // L_total = L_CE + a1 L_link + a2 L_perturb + sign * a3 L_entropy
  Tensor total_loss(Tape& tape, const ForwardResult& fr, int label) const {
    if (label < 0 || label >= config.classes)
      throw std::invalid_argument("total_loss: label out of range");
    Tensor p = tape.slice_cols(fr.class_probs, label, label + 1);
    Tensor ce = tape.scalar_mul(tape.log(tape.clamp(p, 1e-7, 1.0 - 1e-7)), -1.0);
    Tensor total = ce;
    total = tape.add(total, tape.scalar_mul(fr.link_loss, config.alpha1));
    total = tape.add(total, tape.scalar_mul(fr.perturb_loss, config.alpha2));
    total = tape.add(total, tape.scalar_mul(fr.entropy, config.entropy_sign * config.alpha3));
    return total;
  }

  // Inference without gradient tracking.
  TreeTrace explain(const Graph& g) const {
    Tape tape;
    ParamBinding bind = ParamBinding::bind(tape, params, false);
    return forward(tape, bind, g).trace;
  }

  int predict(const Graph& g) const { return explain(g).pred; }

 private:
  struct Level {
    GcnStack gcn;
    AssignmentHead head;
    std::vector<PerturbationSet> perturbs;  // one per tree position, or one shared
    std::vector<Router> routers;            // one per tree position
  };

  // D^-1/2 (A + I) D^-1/2 built from primitives so gradients flow through
  // the pooled adjacencies of deeper levels.
  static Tensor normalize_on_tape(Tape& tape, Tensor a, int n) {
    Tensor ahat = tape.add(a, tape.leaf(Matrix::identity(n)));
    Tensor rowsum = tape.scalar_mul(tape.mean_cols(ahat), n);       // n x 1
    Tensor dinv = tape.reciprocal(tape.sqrt(rowsum));               // n x 1
    Tensor outer = tape.matmul(dinv, tape.transpose(dinv));         // n x n
    return tape.mul(ahat, outer);
  }

  std::vector<Level> levels_;
  int readout_w_ = -1;
  int readout_b_ = -1;
};

inline TifModel make_variant(TifConfig cfg) { return TifModel::create(cfg); }

struct EpochStats {
  int epoch = 0;
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  double wall_seconds = 0.0;
  int stopped_epoch = 0;
};

struct DivergenceError : std::runtime_error {
  int epoch;
  explicit DivergenceError(int e)
      : std::runtime_error("training diverged (non-finite loss) at epoch " + std::to_string(e)),
        epoch(e) {}
};

struct TrainOptions {
  double early_stop_train_acc = 1.01;  // disabled by default
  int early_stop_patience = 5;
  bool record_curves = true;
};

inline std::pair<double, double> evaluate(const TifModel& model, const std::vector<Graph>& graphs,
                                          const std::vector<int>& idx) {
  if (idx.empty()) return {0.0, 0.0};
  double loss = 0.0;
  int correct = 0;
  for (int i : idx) {
    Tape tape;
    ParamBinding bind = ParamBinding::bind(tape, model.params, false);
    ForwardResult fr = model.forward(tape, bind, graphs[i]);
    loss += model.total_loss(tape, fr, graphs[i].label).value().scalar();
    if (fr.trace.pred == graphs[i].label) ++correct;
  }
  return {loss / idx.size(), static_cast<double>(correct) / idx.size()};
}

// Mini-batch Adam with per-graph tapes and additive gradient merging.
// Deterministic for threads == 1; with more threads the batch is split into
// contiguous chunks and merged in chunk order, so accumulation order is
// still fixed, but chunk boundaries change with the thread count.
inline TrainingReport train(TifModel& model, const std::vector<Graph>& graphs,
                            std::vector<int> train_idx, const std::vector<int>& val_idx,
                            TrainOptions opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  const TifConfig& cfg = model.config;
  AdamOptimizer opt(cfg.lr);
  Rng shuffle_rng(derive_seed(cfg.seed, 0xBA7C4));
  TrainingReport report;
  int good_streak = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng.engine());
    double epoch_loss = 0.0;
    int epoch_correct = 0;

    for (size_t start = 0; start < train_idx.size(); start += cfg.batch) {
      size_t end = std::min(train_idx.size(), start + cfg.batch);
      std::vector<Matrix> grad_sum;
      for (int p = 0; p < model.params.size(); ++p)
        grad_sum.push_back(Matrix(model.params[p].value.rows, model.params[p].value.cols));
      double batch_loss = 0.0;
      int batch_correct = 0;

      auto process = [&](size_t lo, size_t hi, std::vector<Matrix>& gacc, double& lacc,
                         int& cacc) {
        for (size_t bi = lo; bi < hi; ++bi) {
          const Graph& g = graphs[train_idx[bi]];
          Tape tape;
          ParamBinding bind = ParamBinding::bind(tape, model.params, true);
          ForwardResult fr = model.forward(tape, bind, g);
          Tensor loss = model.total_loss(tape, fr, g.label);
          lacc += loss.value().scalar();
          if (fr.trace.pred == g.label) ++cacc;
          GradMap gm = tape.backward(loss);
          std::vector<Matrix> grads = bind.collect(gm, model.params);
          for (size_t p = 0; p < grads.size(); ++p)
            for (size_t j = 0; j < grads[p].data.size(); ++j)
              gacc[p].data[j] += grads[p].data[j];
        }
      };

      int workers = std::max(1, cfg.threads);
      if (workers == 1 || end - start < 2) {
        process(start, end, grad_sum, batch_loss, batch_correct);
      } else {
        size_t span = end - start;
        workers = std::min<size_t>(workers, span);
        std::vector<std::vector<Matrix>> gparts(workers, grad_sum);
        std::vector<double> lparts(workers, 0.0);
        std::vector<int> cparts(workers, 0);
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) {
          size_t lo = start + span * w / workers;
          size_t hi = start + span * (w + 1) / workers;
          threads.emplace_back([&, w, lo, hi] { process(lo, hi, gparts[w], lparts[w], cparts[w]); });
        }
        for (auto& t : threads) t.join();
        for (int w = 0; w < workers; ++w) {
          batch_loss += lparts[w];
          batch_correct += cparts[w];
          for (size_t p = 0; p < grad_sum.size(); ++p)
            for (size_t j = 0; j < grad_sum[p].data.size(); ++j)
              grad_sum[p].data[j] += gparts[w][p].data[j];
        }
      }

      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch);
      double inv = 1.0 / static_cast<double>(end - start);
      for (auto& gmat : grad_sum)
        for (auto& v : gmat.data) v *= inv;
      opt.step(model.params, grad_sum);
      epoch_loss += batch_loss;
      epoch_correct += batch_correct;
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = train_idx.empty() ? 0.0 : epoch_loss / train_idx.size();
    es.train_acc = train_idx.empty() ? 0.0 : static_cast<double>(epoch_correct) / train_idx.size();
    if (opts.record_curves || epoch == cfg.epochs - 1) {
      auto [vl, va] = evaluate(model, graphs, val_idx);
      es.val_loss = vl;
      es.val_acc = va;
    }
    report.epochs.push_back(es);
    report.stopped_epoch = epoch + 1;

    if (es.train_acc >= opts.early_stop_train_acc) {
      if (++good_streak >= opts.early_stop_patience) break;
    } else {
      good_streak = 0;
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace tif
