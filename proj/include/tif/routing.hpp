#pragma once

// Per-node router over M branches: branch summaries -> logits ->
// probabilities -> deterministic hard selection, plus entropy accounting.

#include <string>
#include <vector>

#include "tif/autodiff.hpp"
#include "tif/params.hpp"
#include "tif/rng.hpp"

namespace tif {

enum class RouterVariant { Mlp, Linear };

struct Router {
  RouterVariant variant = RouterVariant::Mlp;
  int w1 = -1, b1 = -1;  // unused in the linear variant
  int w2 = -1, b2 = -1;
  int arity = 0;

  static Router create(ParamStore& store, Rng& rng, const std::string& prefix, int in_width,
                       int hidden, int arity, RouterVariant variant) {
    Router r;
    r.variant = variant;
    r.arity = arity;
    if (variant == RouterVariant::Mlp) {
      r.w1 = store.add(prefix + ".w1", rng.glorot_matrix(in_width, hidden));
      r.b1 = store.add(prefix + ".b1", Matrix(1, hidden));
      r.w2 = store.add(prefix + ".w2", rng.glorot_matrix(hidden, arity));
      r.b2 = store.add(prefix + ".b2", Matrix(1, arity));
    } else {
      r.w2 = store.add(prefix + ".w", rng.glorot_matrix(in_width, arity));
      r.b2 = store.add(prefix + ".b", Matrix(1, arity));
    }
    return r;
  }
};

struct RoutingDecision {
  Tensor probabilities;  // 1 x M on the tape (simplex)
  Tensor logits;         // 1 x M
  int selected = 0;      // argmax, lowest-index tie-break
};

// Mean-pool each branch matrix to a 1 x d row, then concatenate to
// 1 x (M*d). Pooling makes the router input width independent of cluster
// count, which varies across graphs.
inline Tensor summarize_branches(Tape& tape, const std::vector<Tensor>& branch_z) {
  if (branch_z.empty()) throw std::invalid_argument("summarize_branches: empty branch list");
  int d = branch_z[0].cols();
  Tensor out = tape.mean_rows(branch_z[0]);
  for (size_t i = 1; i < branch_z.size(); ++i) {
    if (branch_z[i].cols() != d)
      throw std::invalid_argument("summarize_branches: branch width disagreement");
    out = tape.hconcat(out, tape.mean_rows(branch_z[i]));
  }
  return out;
}

inline RoutingDecision route(Tape& tape, const ParamBinding& bind, const Router& router,
                             Tensor summary) {
  Tensor logits;
  if (router.variant == RouterVariant::Mlp) {
    Tensor h = tape.relu(tape.add(tape.matmul(summary, bind[router.w1]), bind[router.b1]));
    logits = tape.add(tape.matmul(h, bind[router.w2]), bind[router.b2]);
  } else {
    logits = tape.add(tape.matmul(summary, bind[router.w2]), bind[router.b2]);
  }
  RoutingDecision d;
  d.logits = logits;
  d.probabilities = tape.row_softmax(logits);
  const Matrix& p = d.probabilities.value();
  d.selected = 0;
  for (int i = 1; i < p.cols; ++i)
    if (p.at(0, i) > p.at(0, d.selected)) d.selected = i;
  return d;
}

// The routing probability of the selected branch, as a 1 x 1 tensor; the
// caller multiplies it into the forward value to give the router a gradient
// path through the hard selection.
inline Tensor selection_gate(Tape& tape, const RoutingDecision& d) {
  return tape.slice_cols(d.probabilities, d.selected, d.selected + 1);
}

// H = -sum over routers of sum_i p log p, log clamped at 1e-7.
inline Tensor routing_entropy(Tape& tape, const std::vector<RoutingDecision>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("routing_entropy: empty decision list");
  Tensor h = tape.leaf(Matrix(1, 1));
  for (const auto& d : decisions) {
    Tensor p = d.probabilities;
    Tensor logp = tape.log(tape.clamp(p, 1e-7, 1.0));
    h = tape.sub(h, tape.sum_all(tape.mul(p, logp)));
  }
  return h;
}

}  // namespace tif
