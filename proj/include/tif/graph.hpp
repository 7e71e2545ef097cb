#pragma once

// Graph data model, GCN-style adjacency normalization, node permutation,
// and composition of assignment chains back onto the raw graph.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "tif/matrix.hpp"

namespace tif {

struct Graph {
  int n = 0;
  Matrix adjacency;  // n x n symmetric, nonnegative, zero diagonal on input
  Matrix features;   // n x d0
  int label = 0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("Graph: n must be >= 1");
    if (adjacency.rows != n || adjacency.cols != n)
      throw std::invalid_argument("Graph: adjacency must be n x n");
    if (features.rows != n) throw std::invalid_argument("Graph: feature rows must equal n");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (adjacency.at(i, j) < 0.0)
          throw std::invalid_argument("Graph: adjacency entries must be >= 0");
        if (std::fabs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-12)
          throw std::invalid_argument("Graph: adjacency must be symmetric");
      }
  }
};

struct NormalizedAdjacency {
  Matrix matrix;  // D^-1/2 (A + I) D^-1/2
};

// Self-loops are added here and only here; inputs keep a zero diagonal.
inline NormalizedAdjacency normalize_adjacency(const Matrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("normalize_adjacency: not square");
  int n = a.rows;
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    double deg = 1.0;  // self-loop
    for (int j = 0; j < n; ++j) {
      if (a.at(i, j) < 0.0)
        throw std::invalid_argument("normalize_adjacency: negative adjacency entry");
      if (std::fabs(a.at(i, j) - a.at(j, i)) > 1e-12)
        throw std::invalid_argument("normalize_adjacency: asymmetric adjacency");
      deg += a.at(i, j);
    }
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double hat = a.at(i, j) + (i == j ? 1.0 : 0.0);
      out.at(i, j) = dinv[i] * hat * dinv[j];
    }
  return NormalizedAdjacency{std::move(out)};
}

inline NormalizedAdjacency normalize_adjacency(const Graph& g) {
  g.validate();
  return normalize_adjacency(g.adjacency);
}

// perm[new_index] = old_index is NOT the convention here; node i of the input
// becomes node perm[i] of the output.
inline Graph permute_nodes(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.n)
    throw std::invalid_argument("permute_nodes: permutation size mismatch");
  std::vector<bool> seen(g.n, false);
  for (int p : perm) {
    if (p < 0 || p >= g.n || seen[p])
      throw std::invalid_argument("permute_nodes: not a bijection");
    seen[p] = true;
  }
  Graph out;
  out.n = g.n;
  out.label = g.label;
  out.adjacency = Matrix(g.n, g.n);
  out.features = Matrix(g.n, g.features.cols);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) out.adjacency.at(perm[i], perm[j]) = g.adjacency.at(i, j);
    for (int j = 0; j < g.features.cols; ++j) out.features.at(perm[i], j) = g.features.at(i, j);
  }
  return out;
}

// Composes a chain of row-stochastic assignments onto the raw graph:
// features (S1...Sl)^T X, adjacency (S1...Sl)^T A (S1...Sl). Feature
// dimension stays d0 so a surrogate trained on raw graphs can consume it.
inline Graph coarsen_raw(const Graph& g, const std::vector<Matrix>& assignments) {
  if (assignments.empty()) return g;
  Matrix chain = assignments[0];
  if (chain.rows != g.n) throw std::invalid_argument("coarsen_raw: S1 rows must equal n");
  for (size_t i = 1; i < assignments.size(); ++i) {
    if (assignments[i].rows != chain.cols)
      throw std::invalid_argument("coarsen_raw: assignment chain shape mismatch");
    chain = matmul(chain, assignments[i]);
  }
  Matrix ct = transpose(chain);
  Graph out;
  out.n = chain.cols;
  out.label = g.label;
  out.features = matmul(ct, g.features);
  out.adjacency = matmul(ct, matmul(g.adjacency, chain));
  // enforce exact symmetry against rounding
  for (int i = 0; i < out.n; ++i)
    for (int j = i + 1; j < out.n; ++j) {
      double v = 0.5 * (out.adjacency.at(i, j) + out.adjacency.at(j, i));
      out.adjacency.at(i, j) = v;
      out.adjacency.at(j, i) = v;
    }
  return out;
}

// Thresholded 0/1 view at half the maximum entry, for DOT rendering and
// structure-only kernel comparison; the weighted matrix stays authoritative.
inline Matrix binarize_adjacency(const Matrix& a) {
  double mx = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      if (i != j) mx = std::max(mx, a.at(i, j));
  Matrix out(a.rows, a.cols);
  if (mx <= 0.0) return out;
  double thr = 0.5 * mx;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      if (i != j && a.at(i, j) >= thr) out.at(i, j) = 1.0;
  return out;
}

// One-hot degree featurization capped at d0 bins, for attribute-free datasets.
inline Matrix degree_onehot_features(const Matrix& adjacency, int d0) {
  Matrix f(adjacency.rows, d0);
  for (int i = 0; i < adjacency.rows; ++i) {
    int deg = 0;
    for (int j = 0; j < adjacency.cols; ++j)
      if (adjacency.at(i, j) > 0.0) ++deg;
    f.at(i, std::min(deg, d0 - 1)) = 1.0;
  }
  return f;
}

}  // namespace tif
