#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "tif/metrics.hpp"

using namespace tif;

namespace {

Graph cycle_graph(int n) {
  Graph g;
  g.n = n;
  g.adjacency = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    g.adjacency.at(i, j) = 1.0;
    g.adjacency.at(j, i) = 1.0;
  }
  g.features = degree_onehot_features(g.adjacency, 4);
  return g;
}

Graph path_graph(int n) {
  Graph g;
  g.n = n;
  g.adjacency = Matrix(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    g.adjacency.at(i, i + 1) = 1.0;
    g.adjacency.at(i + 1, i) = 1.0;
  }
  g.features = degree_onehot_features(g.adjacency, 4);
  return g;
}

// brute-force per-class precision/recall loop
std::pair<double, double> f1_oracle(const ConfusionMatrix& cm) {
  int total = 0, diag = 0;
  double f1 = 0.0;
  for (int c = 0; c < cm.classes; ++c) {
    diag += cm.at(c, c);
    int tp = cm.at(c, c), pred = 0, truth = 0;
    for (int o = 0; o < cm.classes; ++o) {
      pred += cm.at(o, c);
      truth += cm.at(c, o);
      total += cm.at(c, o);
    }
    double p = pred > 0 ? static_cast<double>(tp) / pred : 0.0;
    double r = truth > 0 ? static_cast<double>(tp) / truth : 0.0;
    f1 += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  return {static_cast<double>(diag) / total, f1 / cm.classes};
}

}  // namespace

TEST_CASE("accuracy and macro f1 hand cases") {
  {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 4;
    cm.at(1, 1) = 2;
    cm.at(2, 2) = 6;
    auto [acc, f1] = accuracy_f1(cm);
    CHECK(acc == doctest::Approx(1.0));
    CHECK(f1 == doctest::Approx(1.0));
  }
  {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 3;
    cm.at(0, 1) = 1;
    cm.at(1, 0) = 1;
    cm.at(1, 1) = 3;
    auto [acc, f1] = accuracy_f1(cm);
    CHECK(acc == doctest::Approx(0.75));
    CHECK(f1 == doctest::Approx(0.75));
  }
  {
    // class 1 never predicted: its f1 contributes 0
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 5;
    cm.at(1, 0) = 5;
    auto [acc, f1] = accuracy_f1(cm);
    CHECK(acc == doctest::Approx(0.5));
    CHECK(f1 == doctest::Approx(0.5 * (2.0 * 0.5 * 1.0 / 1.5)));
  }
  ConfusionMatrix empty(2);
  CHECK_THROWS_AS(accuracy_f1(empty), std::invalid_argument);
}

TEST_CASE("accuracy_f1 agrees with the per-class loop oracle") {
  Rng rng(17);
  for (int rep = 0; rep < 60; ++rep) {
    int c = rng.uniform_int(2, 5);
    ConfusionMatrix cm(c);
    for (auto& v : cm.counts) v = rng.uniform_int(0, 7);
    if (cm.total() == 0) cm.at(0, 0) = 1;
    auto [acc, f1] = accuracy_f1(cm);
    auto [oacc, of1] = f1_oracle(cm);
    CHECK(acc == doctest::Approx(oacc).epsilon(1e-12));
    CHECK(f1 == doctest::Approx(of1).epsilon(1e-12));
  }
}

TEST_CASE("random walk kernel identities") {
  Graph single;
  single.n = 1;
  single.adjacency = Matrix(1, 1);
  single.features = Matrix(1, 1);
  CHECK(rw_kernel(single, single) == doctest::Approx(1.0));

  Graph c5 = cycle_graph(5);
  CHECK(rw_kernel(c5, c5) == doctest::Approx(1.0).epsilon(1e-12));

  KernelConfig raw;
  raw.normalize = false;
  raw.lambda = 0.05;
  // two isolated nodes: only empty walks, kernel = |V1|*|V2|
  CHECK(rw_kernel(single, single, raw) == doctest::Approx(1.0));
}

TEST_CASE("exact solve matches the truncated power series") {
  Graph c3 = cycle_graph(3);
  Graph p3 = path_graph(3);
  KernelConfig exact;
  exact.lambda = 0.05;
  exact.normalize = false;
  KernelConfig series = exact;
  series.truncation = 24;
  CHECK(rw_kernel(c3, p3, exact) ==
        doctest::Approx(rw_kernel(c3, p3, series)).epsilon(1e-6));

  // spec's T=8 comparison at the same decay
  KernelConfig t8 = exact;
  t8.truncation = 8;
  CHECK(std::fabs(rw_kernel(c3, p3, exact) - rw_kernel(c3, p3, t8)) < 1e-6);
}

TEST_CASE("kernel is symmetric and bounded after normalization") {
  Rng rng(23);
  for (int rep = 0; rep < 8; ++rep) {
    Graph a = test::random_graph(rng, rng.uniform_int(3, 6), 2);
    Graph b = test::random_graph(rng, rng.uniform_int(3, 6), 2);
    double kab = rw_kernel(a, b);
    double kba = rw_kernel(b, a);
    CHECK(kab == doctest::Approx(kba).epsilon(1e-9));
    CHECK(kab > 0.0);
    CHECK(kab <= 1.0 + 1e-9);
  }
}

TEST_CASE("kernel convergence guard rejects oversized decay") {
  Graph c4 = cycle_graph(4);
  KernelConfig cfg;
  cfg.lambda = 0.5;  // 1/(d1*d2) = 1/4
  CHECK_THROWS_AS(rw_kernel(c4, c4, cfg), std::invalid_argument);
}

TEST_CASE("path statistics entropy hand cases") {
  {
    auto pi = path_stats({"0-1", "0-1", "0-1"});
    CHECK(pi.distinct_paths == 1);
    CHECK(pi.normalized_entropy == doctest::Approx(1.0));
    CHECK(pi.frequencies.at("0-1") == doctest::Approx(1.0));
  }
  {
    auto pi = path_stats({"a", "b"});
    CHECK(pi.normalized_entropy == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    auto pi = path_stats({"a", "a", "b", "c"});
    double expect = 1.5 * std::log(2.0) / std::log(3.0);
    CHECK(pi.normalized_entropy == doctest::Approx(expect).epsilon(1e-9));
    double sum = 0.0;
    for (auto& [k, v] : pi.frequencies) sum += v;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("model path metrics: zero noise is perfectly consistent") {
  TifConfig cfg;
  cfg.levels = 2;
  cfg.branches = 2;
  cfg.hidden = 8;
  cfg.feature_dim = 4;
  cfg.classes = 2;
  cfg.k_max = 8;
  cfg.router_hidden = 8;
  cfg.seed = 9;
  TifModel m = TifModel::create(cfg);
  Rng rng(10);
  std::vector<Graph> graphs;
  for (int i = 0; i < 5; ++i) graphs.push_back(test::random_graph(rng, 8, 4));
  std::vector<int> idx(graphs.size());
  std::iota(idx.begin(), idx.end(), 0);

  CHECK(path_consistency(m, graphs, idx, 4, 0.0) == doctest::Approx(1.0));
  CHECK(path_consistency(m, graphs, idx, 1, 0.5) == doctest::Approx(1.0));
  double noisy = path_consistency(m, graphs, idx, 6, 0.05);
  CHECK(noisy > 0.0);
  CHECK(noisy <= 1.0 + 1e-12);

  auto pi = path_importance(m, graphs, idx);
  CHECK(pi.distinct_paths >= 1);
  CHECK(pi.normalized_entropy >= 0.0);
  CHECK(pi.normalized_entropy <= 1.0 + 1e-12);
}

TEST_CASE("surrogate confidence metrics") {
  // untrained surrogate with zeroed output layer: uniform confidence 1/C
  SurrogateGcn sg = SurrogateGcn::create(4, 2, 8, 1);
  int w = sg.params.find("out.w");
  int b = sg.params.find("out.b");
  for (auto& v : sg.params[w].value.data) v = 0.0;
  for (auto& v : sg.params[b].value.data) v = 0.0;

  Rng rng(11);
  Graph g = test::random_graph(rng, 6, 4);
  auto probs = sg.probabilities(g);
  CHECK(probs[0] == doctest::Approx(0.5));

  // identity coarsening: explanation accuracy equals the raw confidence
  TreeTrace t;
  TraceLevel lvl;
  lvl.coarse = g;
  t.levels.push_back(lvl);
  CHECK(explanation_accuracy(sg, {t}, {g.label}) == doctest::Approx(probs[g.label]));
}

TEST_CASE("surrogate training raises confidence on separable data") {
  Rng rng(12);
  std::vector<Graph> graphs;
  for (int i = 0; i < 12; ++i) {
    Graph g = test::random_graph(rng, 7, 4, i % 2 == 0 ? 0.9 : 0.0);
    g.label = i % 2;
    graphs.push_back(g);
  }
  std::vector<int> idx(graphs.size());
  std::iota(idx.begin(), idx.end(), 0);
  SurrogateGcn sg = SurrogateGcn::create(4, 2, 16, 2);
  sg.train(graphs, idx, 40, 0.01, 6, 2);
  double conf = 0.0;
  for (const Graph& g : graphs) conf += sg.probabilities(g)[g.label];
  conf /= graphs.size();
  CHECK(conf > 0.7);
}

TEST_CASE("consistency scores explanations against templates") {
  SynthSpec spec;
  spec.kind = SynthKind::GraphCycle;
  spec.count = 4;
  spec.scale = 0.1;
  spec.seed = 3;
  DatasetBundle b = gen_graphcycle(spec);

  // a trace whose explanation equals the template scores exactly 1
  std::vector<TreeTrace> traces;
  std::vector<int> idx;
  for (int i = 0; i < 4; ++i) {
    TreeTrace t;
    TraceLevel lvl;
    lvl.coarse = b.ground_truth[i];
    t.levels.push_back(lvl);
    traces.push_back(t);
    idx.push_back(i);
  }
  CHECK(consistency(traces, idx, b) == doctest::Approx(1.0).epsilon(1e-9));

  DatasetBundle no_gt = b;
  no_gt.ground_truth.clear();
  CHECK_THROWS_AS(consistency(traces, idx, no_gt), std::invalid_argument);
}
