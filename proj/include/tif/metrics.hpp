#pragma once

// Prediction metrics (accuracy, macro-F1), explanation accuracy via a
// surrogate GCN, random-walk kernel consistency, path consistency under
// feature noise, and normalized-entropy path importance.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tif/coarsening.hpp"
#include "tif/datasets.hpp"
#include "tif/graph.hpp"
#include "tif/model.hpp"

namespace tif {

struct ConfusionMatrix {
  int classes = 0;
  std::vector<int> counts;  // row = true, col = predicted

  explicit ConfusionMatrix(int c = 0) : classes(c), counts(c * c, 0) {}
  int& at(int truth, int pred) { return counts[truth * classes + pred]; }
  int at(int truth, int pred) const { return counts[truth * classes + pred]; }
  int total() const {
    int t = 0;
    for (int v : counts) t += v;
    return t;
  }
};

// accuracy = trace/total; macro-F1 averages per-class 2PR/(P+R), with the
// degenerate P+R == 0 case contributing 0.
inline std::pair<double, double> accuracy_f1(const ConfusionMatrix& cm) {
  int total = cm.total();
  if (total == 0) throw std::invalid_argument("accuracy_f1: empty confusion matrix");
  int diag = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < cm.classes; ++c) {
    diag += cm.at(c, c);
    int tp = cm.at(c, c), fp = 0, fn = 0;
    for (int o = 0; o < cm.classes; ++o)
      if (o != c) {
        fp += cm.at(o, c);
        fn += cm.at(c, o);
      }
    double denom = 2.0 * tp + fp + fn;
    f1_sum += denom > 0 ? 2.0 * tp / denom : 0.0;
  }
  return {static_cast<double>(diag) / total, f1_sum / cm.classes};
}

inline ConfusionMatrix confusion(const TifModel& model, const std::vector<Graph>& graphs,
                                 const std::vector<int>& idx) {
  ConfusionMatrix cm(model.config.classes);
  for (int i : idx) cm.at(graphs[i].label, model.predict(graphs[i]))++;
  return cm;
}

// ---------------------------------------------------------------------------
// Surrogate classifier for explanation accuracy: plain 2-layer GCN with a
// column-mean readout, trained on the raw train-fold graphs.

class SurrogateGcn {
 public:
  ParamStore params;
  int feature_dim = 0, classes = 0;

  static SurrogateGcn create(int feature_dim, int classes, int width, uint64_t seed) {
    SurrogateGcn s;
    s.feature_dim = feature_dim;
    s.classes = classes;
    Rng rng(derive_seed(seed, 0x5C0DE));
    s.gcn_ = GcnStack::create(s.params, rng, "gcn", feature_dim, width, 2);
    s.w_ = s.params.add("out.w", rng.glorot_matrix(width, classes));
    s.b_ = s.params.add("out.b", Matrix(1, classes));
    return s;
  }

  Tensor forward(Tape& tape, const ParamBinding& bind, const Graph& g) const {
    if (g.features.cols != feature_dim)
      throw std::invalid_argument("surrogate: feature width mismatch");
    NormalizedAdjacency na = normalize_adjacency(g.adjacency);
    Tensor norm = tape.leaf(na.matrix);
    Tensor z = gcn_.forward(tape, bind, norm, tape.leaf(g.features));
    Tensor pooled = tape.mean_rows(z);
    return tape.row_softmax(tape.add(tape.matmul(pooled, bind[w_]), bind[b_]));
  }

  std::vector<double> probabilities(const Graph& g) const {
    Tape tape;
    ParamBinding bind = ParamBinding::bind(tape, params, false);
    const Matrix& p = forward(tape, bind, g).value();
    return {p.data.begin(), p.data.end()};
  }

  void train(const std::vector<Graph>& graphs, const std::vector<int>& idx, int epochs = 100,
             double lr = 0.01, int batch = 32, uint64_t seed = 1) {
    AdamOptimizer opt(lr);
    Rng shuffle_rng(derive_seed(seed, 0x5C0DF));
    std::vector<int> order = idx;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
      for (size_t start = 0; start < order.size(); start += batch) {
        size_t end = std::min(order.size(), start + batch);
        std::vector<Matrix> grad_sum;
        for (int p = 0; p < params.size(); ++p)
          grad_sum.push_back(Matrix(params[p].value.rows, params[p].value.cols));
        for (size_t bi = start; bi < end; ++bi) {
          const Graph& g = graphs[order[bi]];
          Tape tape;
          ParamBinding bind = ParamBinding::bind(tape, params, true);
          Tensor probs = forward(tape, bind, g);
          Tensor p = tape.slice_cols(probs, g.label, g.label + 1);
          Tensor loss = tape.scalar_mul(tape.log(tape.clamp(p, 1e-7, 1.0 - 1e-7)), -1.0);
          GradMap gm = tape.backward(loss);
          auto grads = bind.collect(gm, params);
          for (size_t pi = 0; pi < grads.size(); ++pi)
            for (size_t j = 0; j < grads[pi].data.size(); ++j)
              grad_sum[pi].data[j] += grads[pi].data[j];
        }
        double inv = 1.0 / static_cast<double>(end - start);
        for (auto& gmat : grad_sum)
          for (auto& v : gmat.data) v *= inv;
        opt.step(params, grad_sum);
      }
    }
  }

 private:
  GcnStack gcn_;
  int w_ = -1, b_ = -1;
};

// Mean surrogate confidence assigned to the true class when fed each trace's
// coarsest explanation graph.
inline double explanation_accuracy(const SurrogateGcn& surrogate,
                                   const std::vector<TreeTrace>& traces,
                                   const std::vector<int>& labels) {
  if (traces.empty() || traces.size() != labels.size())
    throw std::invalid_argument("explanation_accuracy: trace/label mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < traces.size(); ++i) {
    const Graph& expl = traces[i].levels.back().coarse;
    sum += surrogate.probabilities(expl)[labels[i]];
  }
  return sum / traces.size();
}

// ---------------------------------------------------------------------------
// Geometric random-walk kernel on the direct-product graph.

struct KernelConfig {
  double lambda = -1.0;  // < 0: auto 0.9/(d1_max*d2_max)
  int truncation = -1;   // >= 0: truncated power series instead of exact solve
  bool normalize = true;
};

namespace detail {

inline int max_degree(const Matrix& a) {
  int best = 0;
  for (int i = 0; i < a.rows; ++i) {
    int d = 0;
    for (int j = 0; j < a.cols; ++j)
      if (a.at(i, j) > 0.0) ++d;
    best = std::max(best, d);
  }
  return best;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows * b.rows, a.cols * b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) {
      double v = a.at(i, j);
      if (v == 0.0) continue;
      for (int p = 0; p < b.rows; ++p)
        for (int q = 0; q < b.cols; ++q) out.at(i * b.rows + p, j * b.cols + q) = v * b.at(p, q);
    }
  return out;
}

inline double rw_kernel_raw(const Matrix& a1, const Matrix& a2, double lambda, int truncation) {
  Matrix ax = kron(a1, a2);
  int n = ax.rows;
  if (truncation >= 0) {
    // sum_{t<=T} lambda^t 1^T Ax^t 1 via iterated mat-vec
    std::vector<double> v(n, 1.0);
    double total = 0.0, scale = 1.0;
    for (int t = 0; t <= truncation; ++t) {
      double s = 0.0;
      for (double x : v) s += x;
      total += scale * s;
      scale *= lambda;
      if (t < truncation) {
        std::vector<double> nv(n, 0.0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) nv[i] += ax.at(i, j) * v[j];
        v = nv;
      }
    }
    return total;
  }
  // exact: 1^T (I - lambda Ax)^{-1} 1
  Matrix system = Matrix::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) system.at(i, j) -= lambda * ax.at(i, j);
  Matrix x = lu_solve(system, Matrix(n, 1, 1.0));
  double total = 0.0;
  for (double v : x.data) total += v;
  return total;
}

}  // namespace detail

inline double rw_kernel(const Graph& g1, const Graph& g2, KernelConfig cfg = {}) {
  if (g1.n == 0 || g2.n == 0) throw std::invalid_argument("rw_kernel: empty graph");
  Matrix a1 = binarize_adjacency(g1.adjacency);
  Matrix a2 = binarize_adjacency(g2.adjacency);
  int d1 = detail::max_degree(a1), d2 = detail::max_degree(a2);
  // normalization also evaluates the g1 x g1 and g2 x g2 product graphs, so
  // the decay must clear the larger self-product spectral bound
  int dmax = std::max(d1, d2);
  long bound = cfg.normalize ? static_cast<long>(dmax) * dmax : static_cast<long>(d1) * d2;
  double lambda = cfg.lambda;
  if (lambda < 0.0) lambda = bound > 0 ? 0.9 / bound : 0.5;
  if (cfg.truncation < 0 && bound > 0 && lambda >= 1.0 / bound)
    throw std::invalid_argument("rw_kernel: decay violates the convergence guard");
  double k12 = detail::rw_kernel_raw(a1, a2, lambda, cfg.truncation);
  if (!cfg.normalize) return k12;
  double k11 = detail::rw_kernel_raw(a1, a1, lambda, cfg.truncation);
  double k22 = detail::rw_kernel_raw(a2, a2, lambda, cfg.truncation);
  return k12 / std::sqrt(k11 * k22);
}

// Mean normalized kernel between each trace's coarsest explanation and the
// matching ground-truth template.
inline double consistency(const std::vector<TreeTrace>& traces, const std::vector<int>& idx,
                          const DatasetBundle& bundle, KernelConfig cfg = {}) {
  if (!bundle.has_ground_truth())
    throw std::invalid_argument("consistency: dataset has no ground-truth templates");
  if (traces.size() != idx.size())
    throw std::invalid_argument("consistency: trace/index mismatch");
  if (traces.empty()) throw std::invalid_argument("consistency: empty trace list");
  double sum = 0.0;
  for (size_t i = 0; i < traces.size(); ++i)
    sum += rw_kernel(traces[i].levels.back().coarse, bundle.ground_truth[idx[i]], cfg);
  return sum / traces.size();
}

// ---------------------------------------------------------------------------
// Path metrics.

namespace detail {

inline Graph with_feature_noise(const Graph& g, Rng& rng, double sigma) {
  Graph out = g;
  if (sigma > 0.0)
    for (auto& v : out.features.data) v += rng.normal(0.0, sigma);
  return out;
}

}  // namespace detail

// Mean over graphs of modal-path frequency across R noisy forwards.
inline double path_consistency(const TifModel& model, const std::vector<Graph>& graphs,
                               const std::vector<int>& idx, int runs, double sigma,
                               uint64_t seed = 1) {
  if (runs < 1) throw std::invalid_argument("path_consistency: runs must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("path_consistency: sigma must be >= 0");
  if (idx.empty()) throw std::invalid_argument("path_consistency: empty graph list");
  double sum = 0.0;
  for (size_t gi = 0; gi < idx.size(); ++gi) {
    std::map<std::string, int> tally;
    for (int r = 0; r < runs; ++r) {
      Rng rng(derive_seed(seed, (static_cast<uint64_t>(gi) << 20) + r));
      Graph noisy = detail::with_feature_noise(graphs[idx[gi]], rng, sigma);
      tally[model.explain(noisy).path_id()]++;
    }
    int modal = 0;
    for (auto& [path, count] : tally) modal = std::max(modal, count);
    sum += static_cast<double>(modal) / runs;
  }
  return sum / idx.size();
}

struct PathImportance {
  std::map<std::string, double> frequencies;  // sums to 1
  double normalized_entropy = 1.0;            // 1.0 when only one path observed
  int distinct_paths = 0;
};

inline PathImportance path_stats(const std::vector<std::string>& path_ids) {
  if (path_ids.empty()) throw std::invalid_argument("path_stats: empty path list");
  std::map<std::string, int> tally;
  for (const auto& p : path_ids) tally[p]++;
  PathImportance pi;
  pi.distinct_paths = static_cast<int>(tally.size());
  double total = static_cast<double>(path_ids.size());
  double h = 0.0;
  for (auto& [path, count] : tally) {
    double f = count / total;
    pi.frequencies[path] = f;
    h -= f * std::log(f);
  }
  pi.normalized_entropy = pi.distinct_paths > 1 ? h / std::log(pi.distinct_paths) : 1.0;
  return pi;
}

inline PathImportance path_importance(const TifModel& model, const std::vector<Graph>& graphs,
                                      const std::vector<int>& idx) {
  if (idx.empty()) throw std::invalid_argument("path_importance: empty graph list");
  std::vector<std::string> ids;
  ids.reserve(idx.size());
  for (int i : idx) ids.push_back(model.explain(graphs[i]).path_id());
  return path_stats(ids);
}

}  // namespace tif
