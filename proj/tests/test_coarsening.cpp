#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "tif/coarsening.hpp"

using namespace tif;

TEST_CASE("gcn forward hand cases") {
  {
    // single node, identity weight: relu of the input row
    ParamStore store;
    Rng rng(1);
    GcnStack s = GcnStack::create(store, rng, "g", 3, 3, 1);
    store[s.weights[0]].value = Matrix::identity(3);
    Tape tape;
    ParamBinding bind = ParamBinding::bind(tape, store, false);
    Tensor z = s.forward(tape, bind, tape.leaf(Matrix(1, 1, 1.0)),
                         tape.leaf(Matrix::ones(1, 3)));
    for (double v : z.value().data) CHECK(v == doctest::Approx(1.0));
  }
  {
    // zero features propagate to zero embeddings
    ParamStore store;
    Rng rng(2);
    GcnStack s = GcnStack::create(store, rng, "g", 4, 8, 2);
    Tape tape;
    ParamBinding bind = ParamBinding::bind(tape, store, false);
    Matrix norm = normalize_adjacency(Matrix::from_rows({{0, 1}, {1, 0}})).matrix;
    Tensor z = s.forward(tape, bind, tape.leaf(norm), tape.leaf(Matrix(2, 4)));
    for (double v : z.value().data) CHECK(v == 0.0);
  }
}

TEST_CASE("gcn forward equals explicit matrix-product evaluation") {
  Rng rng(9);
  ParamStore store;
  GcnStack s = GcnStack::create(store, rng, "g", 3, 5, 2);
  Matrix a = Matrix::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  Matrix norm = normalize_adjacency(a).matrix;
  Matrix x = rng.uniform_matrix(3, 3, -1, 1);

  Tape tape;
  ParamBinding bind = ParamBinding::bind(tape, store, false);
  Tensor z = s.forward(tape, bind, tape.leaf(norm), tape.leaf(x));

  Matrix h = x;
  for (int w : s.weights) {
    h = matmul(norm, h);
    h = matmul(h, store[w].value);
    for (auto& v : h.data) v = v > 0 ? v : 0.0;
  }
  CHECK(test::max_rel_err(z.value(), h, 1e-9) < 1e-9);
}

TEST_CASE("assignment head produces row-stochastic slices") {
  Rng rng(4);
  ParamStore store;
  AssignmentHead head = AssignmentHead::create(store, rng, "h", 6, 8);
  Tape tape;
  ParamBinding bind = ParamBinding::bind(tape, store, false);
  Tensor z = tape.leaf(rng.uniform_matrix(5, 6, -1, 1));

  Tensor s1 = head.assign(tape, bind, z, 1);
  for (double v : s1.value().data) CHECK(v == doctest::Approx(1.0));

  Tensor s2 = head.assign(tape, bind, z, 2);
  for (int i = 0; i < 5; ++i)
    CHECK(s2.value().at(i, 0) + s2.value().at(i, 1) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(head.assign(tape, bind, z, 0), std::invalid_argument);
  CHECK_THROWS_AS(head.assign(tape, bind, z, 9), std::invalid_argument);
}

TEST_CASE("zero assignment weights give uniform clusters") {
  Rng rng(4);
  ParamStore store;
  AssignmentHead head = AssignmentHead::create(store, rng, "h", 6, 8);
  for (int p = 0; p < store.size(); ++p)
    for (auto& v : store[p].value.data) v = 0.0;
  Tape tape;
  ParamBinding bind = ParamBinding::bind(tape, store, false);
  Tensor s = head.assign(tape, bind, tape.leaf(rng.uniform_matrix(4, 6, -1, 1)), 3);
  for (double v : s.value().data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("pool identity and merge cases") {
  Rng rng(6);
  Tape tape;
  Tensor z = tape.leaf(rng.uniform_matrix(2, 3, -1, 1));
  Tensor a = tape.leaf(Matrix::from_rows({{0, 1}, {1, 0}}));

  auto [zi, ai] = pool(tape, z, a, tape.leaf(Matrix::identity(2)));
  CHECK(zi.value().data == z.value().data);
  CHECK(ai.value().data == a.value().data);

  auto [zm, am] = pool(tape, z, a, tape.leaf(Matrix(2, 1, 1.0)));
  CHECK(am.value().scalar() == doctest::Approx(2.0));
  for (int j = 0; j < 3; ++j)
    CHECK(zm.value().at(0, j) ==
          doctest::Approx(z.value().at(0, j) + z.value().at(1, j)).epsilon(1e-12));
}

TEST_CASE("pool matches brute-force sums and is linear in z") {
  Rng rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    Graph g = test::random_graph(rng, 5, 3);
    Matrix s = test::random_row_stochastic(rng, 5, 2);
    Tape tape;
    Tensor zt = tape.leaf(g.features);
    Tensor at = tape.leaf(g.adjacency);
    Tensor st = tape.leaf(s);
    auto [zp, ap] = pool(tape, zt, at, st);

    Matrix oracle(2, 2);
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) {
        double sum = 0.0;
        for (int i = 0; i < 5; ++i)
          for (int j = 0; j < 5; ++j) sum += s.at(i, p) * g.adjacency.at(i, j) * s.at(j, q);
        oracle.at(p, q) = sum;
      }
    CHECK(test::max_rel_err(ap.value(), oracle, 1e-6) < 1e-9);

    auto [zp2, ap2] = pool(tape, tape.scalar_mul(zt, 2.5), at, st);
    for (size_t i = 0; i < zp.value().data.size(); ++i)
      CHECK(zp2.value().data[i] == doctest::Approx(2.5 * zp.value().data[i]).epsilon(1e-12));
  }
}

TEST_CASE("link loss hand cases") {
  {
    // n=1, A=[[0]], S=[[1]]: recon clamps to 1-1e-7, loss = -log(1e-7)
    Tape tape;
    Tensor loss = link_loss(tape, tape.leaf(Matrix(1, 1)), tape.leaf(Matrix(1, 1, 1.0)));
    CHECK(loss.value().scalar() == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
  }
  {
    // A = S S^T with interior entries: BCE bottoms out at the binary entropy
    Matrix s = Matrix::from_rows({{0.6, 0.4}, {0.3, 0.7}});
    Matrix recon = matmul(s, transpose(s));
    Tape tape;
    Tensor loss = link_loss(tape, tape.leaf(recon), tape.leaf(s));
    double entropy = 0.0;
    for (double p : recon.data) entropy += -(p * std::log(p) + (1 - p) * std::log(1 - p));
    entropy /= recon.data.size();
    CHECK(loss.value().scalar() == doctest::Approx(entropy).epsilon(1e-9));
  }
  {
    // 4 nodes in 2 perfect clusters vs the direct double-loop BCE
    Matrix s = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
    Matrix a = Matrix::from_rows({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
    Tape tape;
    Tensor loss = link_loss(tape, tape.leaf(a), tape.leaf(s));
    Matrix recon = matmul(s, transpose(s));
    double oracle = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double r = std::min(1.0 - 1e-7, std::max(1e-7, recon.at(i, j)));
        oracle -= a.at(i, j) * std::log(r) + (1 - a.at(i, j)) * std::log(1 - r);
      }
    oracle /= 16.0;
    CHECK(loss.value().scalar() == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("link loss is nonnegative and differentiable in S") {
  Rng rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    Graph g = test::random_graph(rng, 5, 2);
    Matrix s = test::random_row_stochastic(rng, 5, 2);
    Tape tape;
    Tensor st = tape.leaf(s, true);
    Tensor loss = link_loss(tape, tape.leaf(g.adjacency), st);
    CHECK(loss.value().scalar() >= 0.0);
    GradMap gm = tape.backward(loss);
    Matrix fd = finite_difference_gradient(
        [&](const Matrix& m) {
          Tape t2;
          return link_loss(t2, t2.leaf(g.adjacency), t2.leaf(m)).value().scalar();
        },
        s, 1e-5);
    CHECK(test::max_rel_err(gm.at(st.id), fd) < 1e-4);
  }
}

TEST_CASE("link loss rejects out-of-range adjacency") {
  Rng rng(1);
  Tape tape;
  Tensor bad = tape.leaf(Matrix(2, 2, 1.5));
  Tensor s = tape.leaf(test::random_row_stochastic(rng, 2, 2));
  CHECK_THROWS_AS(link_loss(tape, bad, s), std::invalid_argument);
}

TEST_CASE("rescale maps weighted matrices into [0,1]") {
  Tape tape;
  Tensor a = tape.leaf(Matrix::from_rows({{2.0, 5.0}, {5.0, 8.0}}));
  Tensor r = rescale_01(tape, a);
  CHECK(r.value().at(0, 0) == doctest::Approx(0.0));
  CHECK(r.value().at(1, 1) == doctest::Approx(1.0));
  CHECK(r.value().at(0, 1) == doctest::Approx(0.5));

  Tensor flat = rescale_01(tape, tape.leaf(Matrix(3, 3, 4.0)));
  for (double v : flat.value().data) CHECK(v == 0.0);
}

TEST_CASE("cluster count floor, rounding, and cap") {
  CHECK(cluster_count(0.2, 10, 64) == 2);
  CHECK(cluster_count(0.2, 23, 64) == 5);
  CHECK(cluster_count(0.1, 5, 64) == 2);   // floor at 2
  CHECK(cluster_count(0.5, 300, 64) == 64);  // cap at k_max
}
