#pragma once

// Learnable branch perturbations: M additive vectors producing M variant
// assignment matrices per parent node, plus similarity/diversity losses.

#include <string>
#include <vector>

#include "tif/autodiff.hpp"
#include "tif/params.hpp"
#include "tif/rng.hpp"

namespace tif {

enum class PerturbSpace { Logit, Simplex };

struct PerturbationSet {
  std::vector<int> vectors;  // M param indices, each 1 x k_max
  PerturbSpace space = PerturbSpace::Logit;
  double lambda = 0.1;  // similarity weight, shared across branches
  double mu = 0.1;      // diversity weight
  double margin = 1.0;  // hinge margin m
  bool losses_enabled = true;

  static PerturbationSet create(ParamStore& store, Rng& rng, const std::string& prefix,
                                int branches, int k_max, bool trainable = true,
                                bool zero_init = false) {
    if (branches < 1) throw std::invalid_argument("PerturbationSet: need at least 1 branch");
    PerturbationSet ps;
    for (int i = 0; i < branches; ++i) {
      Matrix v = zero_init ? Matrix(1, k_max) : rng.normal_matrix(1, k_max, 0.0, 0.01);
      ps.vectors.push_back(
          store.add(prefix + ".p" + std::to_string(i), std::move(v), trainable));
    }
    return ps;
  }

  int branches() const { return static_cast<int>(vectors.size()); }

  // Logit space: row-softmax(logits[:, :k] + p[:k]) per branch.
  // Simplex space (literal additive form): renormalize(clamp(S + p, 0, 1))
  // rowwise with floor 1e-7.
  std::vector<Tensor> perturb_assignments(Tape& tape, const ParamBinding& bind, Tensor logits,
                                          int k) const {
    if (k < 1 || k > logits.cols())
      throw std::invalid_argument("perturb_assignments: k out of range");
    int n = logits.rows();
    Tensor sliced = tape.slice_cols(logits, 0, k);
    std::vector<Tensor> out;
    out.reserve(vectors.size());
    if (space == PerturbSpace::Logit) {
      for (int p : vectors) {
        Tensor pv = tape.repeat_rows(tape.slice_cols(bind[p], 0, k), n);
        out.push_back(tape.row_softmax(tape.add(sliced, pv)));
      }
    } else {
      Tensor s = tape.row_softmax(sliced);
      Tensor floor_eps = tape.leaf(Matrix(n, k, 1e-7));
      for (int p : vectors) {
        Tensor pv = tape.repeat_rows(tape.slice_cols(bind[p], 0, k), n);
        Tensor clamped = tape.add(tape.clamp(tape.add(s, pv), 0.0, 1.0), floor_eps);
        // divide each row by its sum
        Tensor rowsum = tape.scalar_mul(tape.mean_cols(clamped), k);  // n x 1
        Tensor inv = tape.reciprocal(rowsum);
        Tensor invfull = tape.transpose(tape.repeat_rows(tape.transpose(inv), k));
        out.push_back(tape.mul(clamped, invfull));
      }
    }
    return out;
  }
};

// X^(i) = S^(i)^T Z per branch
inline std::vector<Tensor> branch_embeddings(Tape& tape, const std::vector<Tensor>& branches,
                                             Tensor z) {
  std::vector<Tensor> out;
  out.reserve(branches.size());
  for (Tensor s : branches) out.push_back(tape.matmul(tape.transpose(s), z));
  return out;
}

struct PerturbLosses {
  Tensor similarity;
  Tensor diversity;
  Tensor total;
};

// sqrt(x + eps); the epsilon keeps the gradient finite when two branches
// coincide exactly.
inline Tensor sqrt_scalar(Tape& tape, Tensor x) {
  return tape.sqrt(tape.add(x, tape.leaf(Matrix(1, 1, 1e-12))));
}

// similarity = sum_i lambda * ||X^(i) - base||_F^2
// diversity  = mu * sum_{i != j} max(0, m - ||X^(i) - X^(j)||_F)^2
// The diversity term is a margin hinge so that minimizing the total loss
// pushes branches apart up to the margin and no further.
inline PerturbLosses perturb_losses(Tape& tape, const PerturbationSet& ps,
                                    const std::vector<Tensor>& branch_x, Tensor base_x) {
  Tensor sim = tape.leaf(Matrix(1, 1));
  for (Tensor x : branch_x)
    sim = tape.add(sim, tape.scalar_mul(tape.frobenius_sq(tape.sub(x, base_x)), ps.lambda));

  Tensor div = tape.leaf(Matrix(1, 1));
  int m = static_cast<int>(branch_x.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      Tensor d2 = tape.frobenius_sq(tape.sub(branch_x[i], branch_x[j]));
      Tensor dist = sqrt_scalar(tape, d2);
      Tensor gap = tape.relu(tape.sub(tape.leaf(Matrix(1, 1, ps.margin)), dist));
      div = tape.add(div, tape.frobenius_sq(gap));
    }
  div = tape.scalar_mul(div, ps.mu);
  return {sim, div, tape.add(sim, div)};
}

// Literal raw squared-distance diversity (positive weight), kept for the
// --literal-eq9 comparison switch.
inline PerturbLosses perturb_losses_literal(Tape& tape, const PerturbationSet& ps,
                                            const std::vector<Tensor>& branch_x, Tensor base_x) {
  Tensor sim = tape.leaf(Matrix(1, 1));
  for (Tensor x : branch_x)
    sim = tape.add(sim, tape.scalar_mul(tape.frobenius_sq(tape.sub(x, base_x)), ps.lambda));
  Tensor div = tape.leaf(Matrix(1, 1));
  int m = static_cast<int>(branch_x.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) div = tape.add(div, tape.frobenius_sq(tape.sub(branch_x[i], branch_x[j])));
  div = tape.scalar_mul(div, ps.mu);
  return {sim, div, tape.add(sim, div)};
}

}  // namespace tif
