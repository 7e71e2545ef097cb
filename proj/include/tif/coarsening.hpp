#pragma once

// One coarsening level: GCN embedding, soft cluster assignment, pooling of
// features/adjacency, and the edge-prediction (link) loss.

#include <utility>
#include <vector>

#include "tif/autodiff.hpp"
#include "tif/graph.hpp"
#include "tif/params.hpp"
#include "tif/rng.hpp"

namespace tif {

struct GcnStack {
  std::vector<int> weights;  // param indices, applied in order

  static GcnStack create(ParamStore& store, Rng& rng, const std::string& prefix, int d_in,
                         int d_hidden, int layers = 2) {
    GcnStack s;
    int in = d_in;
    for (int l = 0; l < layers; ++l) {
      s.weights.push_back(store.add(prefix + ".W" + std::to_string(l),
                                    rng.glorot_matrix(in, d_hidden)));
      in = d_hidden;
    }
    return s;
  }

  // Z = relu(N ... relu(N x W0) ... Wlast)
  Tensor forward(Tape& tape, const ParamBinding& bind, Tensor norm_adj, Tensor x) const {
    Tensor z = x;
    for (int w : weights) z = tape.relu(tape.matmul(tape.matmul(norm_adj, z), bind[w]));
    return z;
  }
};

struct AssignmentHead {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
  int k_max = 0;

  static AssignmentHead create(ParamStore& store, Rng& rng, const std::string& prefix,
                               int d_hidden, int k_max) {
    if (k_max < 2) throw std::invalid_argument("AssignmentHead: k_max must be >= 2");
    AssignmentHead h;
    h.k_max = k_max;
    h.w1 = store.add(prefix + ".w1", rng.glorot_matrix(d_hidden, d_hidden));
    h.b1 = store.add(prefix + ".b1", Matrix(1, d_hidden));
    h.w2 = store.add(prefix + ".w2", rng.glorot_matrix(d_hidden, k_max));
    h.b2 = store.add(prefix + ".b2", Matrix(1, k_max));
    return h;
  }

  // pre-softmax cluster logits, n x k_max
  Tensor logits(Tape& tape, const ParamBinding& bind, Tensor z) const {
    int n = z.rows();
    Tensor h = tape.relu(
        tape.add(tape.matmul(z, bind[w1]), tape.repeat_rows(bind[b1], n)));
    return tape.add(tape.matmul(h, bind[w2]), tape.repeat_rows(bind[b2], n));
  }

  // S = row-softmax of the first k logit columns
  Tensor assign(Tape& tape, const ParamBinding& bind, Tensor z, int k) const {
    if (k < 1 || k > k_max) throw std::invalid_argument("assign: k out of range");
    return tape.row_softmax(tape.slice_cols(logits(tape, bind, z), 0, k));
  }
};

// Xc = S^T Z, Ac = S^T A S
inline std::pair<Tensor, Tensor> pool(Tape& tape, Tensor z, Tensor a, Tensor s) {
  Tensor st = tape.transpose(s);
  return {tape.matmul(st, z), tape.matmul(st, tape.matmul(a, s))};
}

// Differentiable min-max rescale into [0,1]; used before the link loss on
// the weighted adjacencies of deeper levels.
inline Tensor rescale_01(Tape& tape, Tensor a) {
  Tensor lo = tape.min_all(a);
  Tensor hi = tape.max_all(a);
  double span = hi.value().scalar() - lo.value().scalar();
  if (span <= 1e-12) return tape.scalar_mul(a, 0.0);  // constant matrix
  Tensor inv = tape.reciprocal(tape.sub(hi, lo));
  int r = a.rows(), c = a.cols();
  Tensor shifted = tape.sub(a, tape.scalar_expand(lo, r, c));
  return tape.mul(shifted, tape.scalar_expand(inv, r, c));
}

// BCE between the adjacency (entries in [0,1]) and its reconstruction S S^T,
// normalized by n^2 so graphs of different sizes contribute comparably.
inline Tensor link_loss(Tape& tape, Tensor a, Tensor s) {
  const Matrix& av = a.value();
  if (av.rows != av.cols) throw std::invalid_argument("link_loss: adjacency not square");
  if (s.rows() != av.rows) throw std::invalid_argument("link_loss: S rows must match adjacency");
  for (double v : av.data)
    if (v < -1e-12 || v > 1.0 + 1e-12)
      throw std::invalid_argument("link_loss: adjacency entries outside [0,1]; rescale first");
  int n = av.rows;
  Tensor recon = tape.clamp(tape.matmul(s, tape.transpose(s)), 1e-7, 1.0 - 1e-7);
  Tensor ones = tape.leaf(Matrix::ones(n, n));
  Tensor term = tape.add(tape.mul(a, tape.log(recon)),
                         tape.mul(tape.sub(ones, a), tape.log(tape.sub(ones, recon))));
  return tape.scalar_mul(tape.sum_all(term), -1.0 / (static_cast<double>(n) * n));
}

// K^(l) = max(2, round(q * n)) capped at the head's logit width.
inline int cluster_count(double q, int n, int k_max) {
  int k = static_cast<int>(std::lround(q * n));
  k = std::max(2, k);
  return std::min(k, k_max);
}

}  // namespace tif
