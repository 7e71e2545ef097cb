#include <doctest.h>

#include <numeric>

#include "test_support.hpp"
#include "tif/model.hpp"

using namespace tif;

namespace {

TifConfig small_config() {
  TifConfig cfg;
  cfg.levels = 2;
  cfg.branches = 2;
  cfg.hidden = 8;
  cfg.feature_dim = 4;
  cfg.classes = 2;
  cfg.k_max = 8;
  cfg.router_hidden = 8;
  cfg.seed = 5;
  return cfg;
}

ForwardResult run_forward(const TifModel& m, const Graph& g, Tape& tape) {
  ParamBinding bind = ParamBinding::bind(tape, m.params, false);
  return m.forward(tape, bind, g);
}

}  // namespace

TEST_CASE("config validation") {
  TifConfig bad = small_config();
  bad.q = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.levels = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.branches = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward structural postconditions on a single node") {
  TifConfig cfg = small_config();
  cfg.levels = 1;
  TifModel m = TifModel::create(cfg);
  Graph g;
  g.n = 1;
  g.adjacency = Matrix(1, 1);
  g.features = Matrix(1, 4, 0.3);
  Tape tape;
  ForwardResult fr = run_forward(m, g, tape);
  REQUIRE(fr.trace.levels.size() == 1);
  CHECK(fr.trace.levels[0].coarse.n == 2);  // floor rule K >= 2
  double sum = 0.0;
  for (double v : fr.class_probs.value().data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero readout weights give uniform class probabilities") {
  TifModel m = TifModel::create(small_config());
  int w = m.params.find("readout.w");
  int b = m.params.find("readout.b");
  REQUIRE(w >= 0);
  REQUIRE(b >= 0);
  for (auto& v : m.params[w].value.data) v = 0.0;
  for (auto& v : m.params[b].value.data) v = 0.0;
  Rng rng(2);
  Graph g = test::random_graph(rng, 9, 4);
  Tape tape;
  ForwardResult fr = run_forward(m, g, tape);
  for (double v : fr.class_probs.value().data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("permuting the input changes neither probabilities nor the path") {
  TifModel m = TifModel::create(small_config());
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Graph g = test::random_graph(rng, 8, 4);
    TreeTrace base = m.explain(g);
    std::vector<int> perm(g.n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    TreeTrace permuted = m.explain(permute_nodes(g, perm));
    CHECK(base.path_id() == permuted.path_id());
    REQUIRE(base.probs.size() == permuted.probs.size());
    for (size_t i = 0; i < base.probs.size(); ++i)
      CHECK(base.probs[i] == doctest::Approx(permuted.probs[i]).epsilon(1e-9));
  }
}

TEST_CASE("loss weights zero reduces the total to cross entropy") {
  TifConfig cfg = small_config();
  cfg.alpha1 = cfg.alpha2 = cfg.alpha3 = 0.0;
  TifModel m = TifModel::create(cfg);
  Rng rng(3);
  Graph g = test::random_graph(rng, 7, 4);
  Tape tape;
  ForwardResult fr = run_forward(m, g, tape);
  Tensor total = m.total_loss(tape, fr, 0);
  double p = fr.class_probs.value().at(0, 0);
  CHECK(total.value().scalar() == doctest::Approx(-std::log(p)).epsilon(1e-9));
  CHECK_THROWS_AS(m.total_loss(tape, fr, 5), std::invalid_argument);
}

TEST_CASE("default loss weighting applies the configured coefficients") {
  TifConfig cfg = small_config();
  cfg.alpha1 = 0.3;
  cfg.alpha2 = 0.2;
  cfg.alpha3 = 0.1;
  cfg.entropy_sign = -1;
  TifModel m = TifModel::create(cfg);
  Rng rng(4);
  Graph g = test::random_graph(rng, 7, 4);
  Tape tape;
  ForwardResult fr = run_forward(m, g, tape);
  double ce = -std::log(std::max(1e-7, fr.class_probs.value().at(0, g.label)));
  double expect = ce + 0.3 * fr.link_loss.value().scalar() +
                  0.2 * fr.perturb_loss.value().scalar() - 0.1 * fr.entropy.value().scalar();
  CHECK(m.total_loss(tape, fr, g.label).value().scalar() ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("variant profiles resolve structure and trainability") {
  {
    TifConfig cfg = small_config();
    cfg.branches = 4;
    cfg.profile = VariantProfile::BiTree;
    TifModel m = TifModel::create(cfg);
    CHECK(m.config.branches == 2);
    CHECK(m.config.router_variant == RouterVariant::Linear);
    bool found = false;
    for (int p = 0; p < m.params.size(); ++p)
      if (m.params[p].name.find(".p0") != std::string::npos) {
        CHECK_FALSE(m.params[p].trainable);
        found = true;
      }
    CHECK(found);
  }
  {
    TifConfig cfg = small_config();
    cfg.profile = VariantProfile::NoPm;
    TifModel m = TifModel::create(cfg);
    Rng rng(5);
    Graph g = test::random_graph(rng, 8, 4);
    Tape tape;
    ForwardResult fr = run_forward(m, g, tape);
    CHECK(fr.perturb_loss.value().scalar() == 0.0);
    CHECK(fr.similarity_loss.value().scalar() == 0.0);
  }
  {
    TifConfig cfg = small_config();
    cfg.profile = VariantProfile::NoIar;
    TifModel m = TifModel::create(cfg);
    CHECK(m.config.router_variant == RouterVariant::Linear);
    CHECK(m.config.branches == small_config().branches);
  }
}

TEST_CASE("explain is deterministic with L levels of shrinking graphs") {
  TifModel m = TifModel::create(small_config());
  Rng rng(6);
  Graph g = test::random_graph(rng, 20, 4);  // k: round(0.2*20)=4, then round(0.2*4)=2
  TreeTrace t1 = m.explain(g);
  TreeTrace t2 = m.explain(g);
  CHECK(t1.path_id() == t2.path_id());
  CHECK(t1.probs == t2.probs);
  REQUIRE(t1.levels.size() == 2);
  CHECK(t1.levels[0].coarse.n > t1.levels[1].coarse.n);
  CHECK(t1.levels[1].coarse.n >= 2);
}

TEST_CASE("zero epochs leaves parameters untouched") {
  TifConfig cfg = small_config();
  cfg.epochs = 0;
  TifModel m = TifModel::create(cfg);
  std::vector<double> before;
  for (int p = 0; p < m.params.size(); ++p)
    before.insert(before.end(), m.params[p].value.data.begin(), m.params[p].value.data.end());

  Rng rng(8);
  std::vector<Graph> graphs;
  for (int i = 0; i < 6; ++i) graphs.push_back(test::random_graph(rng, 7, 4));
  std::vector<int> idx(graphs.size());
  std::iota(idx.begin(), idx.end(), 0);
  TrainingReport rep = train(m, graphs, idx, idx);
  CHECK(rep.epochs.empty());

  std::vector<double> after;
  for (int p = 0; p < m.params.size(); ++p)
    after.insert(after.end(), m.params[p].value.data.begin(), m.params[p].value.data.end());
  CHECK(before == after);
}

TEST_CASE("a few epochs of training lower the loss on a separable toy set") {
  TifConfig cfg = small_config();
  cfg.epochs = 15;
  cfg.batch = 8;
  cfg.seed = 11;
  TifModel m = TifModel::create(cfg);

  // class 0: dense graphs; class 1: sparse chains
  Rng rng(12);
  std::vector<Graph> graphs;
  for (int i = 0; i < 16; ++i) {
    Graph g = test::random_graph(rng, 8, 4, i % 2 == 0 ? 0.8 : 0.0);
    g.label = i % 2;
    graphs.push_back(g);
  }
  std::vector<int> idx(graphs.size());
  std::iota(idx.begin(), idx.end(), 0);
  TrainingReport rep = train(m, graphs, idx, idx);
  REQUIRE(rep.epochs.size() == 15);
  CHECK(rep.epochs.back().train_loss < rep.epochs.front().train_loss);
}

TEST_CASE("single-thread training is reproducible") {
  auto run = [] {
    TifConfig cfg = small_config();
    cfg.epochs = 3;
    cfg.batch = 4;
    cfg.seed = 21;
    TifModel m = TifModel::create(cfg);
    Rng rng(22);
    std::vector<Graph> graphs;
    for (int i = 0; i < 8; ++i) graphs.push_back(test::random_graph(rng, 7, 4));
    std::vector<int> idx(graphs.size());
    std::iota(idx.begin(), idx.end(), 0);
    train(m, graphs, idx, idx);
    std::vector<double> flat;
    for (int p = 0; p < m.params.size(); ++p)
      flat.insert(flat.end(), m.params[p].value.data.begin(), m.params[p].value.data.end());
    return flat;
  };
  CHECK(run() == run());
}
