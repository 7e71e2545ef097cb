#pragma once

// Reverse-mode automatic differentiation over dense matrices. A Tape is
// built fresh per forward pass (define-by-run); Tensors are handles into it.
// Gradients accumulate additively at fan-out, one backward pass per tape.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tif/matrix.hpp"

namespace tif {

enum class OpKind {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,         // elementwise
  ScalarMul,   // by compile-time constant
  Relu,
  RowSoftmax,
  MeanRows,    // mean over rows -> 1 x c
  MeanCols,    // mean over cols -> r x 1
  HConcat,
  SumAll,
  FrobSq,
  Log,
  Clamp,
  SliceCols,
  RepeatRows,   // 1 x c -> n x c
  ScalarExpand, // 1 x 1 -> r x c
  MinAll,
  MaxAll,
  Reciprocal,
  Sqrt,
};

class Tape;

struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
};

using GradMap = std::unordered_map<int, Matrix>;

class Tape {
 public:
  Tensor leaf(Matrix v, bool requires_grad = false) {
    if (!v.finite()) throw std::domain_error("tape leaf holds non-finite values");
    return push(OpKind::Leaf, {}, std::move(v), requires_grad);
  }

  Tensor matmul(Tensor a, Tensor b) {
    return push(OpKind::MatMul, {a.id, b.id}, tif::matmul(val(a), val(b)));
  }
  Tensor transpose(Tensor a) {
    return push(OpKind::Transpose, {a.id}, tif::transpose(val(a)));
  }
  Tensor add(Tensor a, Tensor b) { return elementwise(OpKind::Add, a, b); }
  Tensor sub(Tensor a, Tensor b) { return elementwise(OpKind::Sub, a, b); }
  Tensor mul(Tensor a, Tensor b) { return elementwise(OpKind::Mul, a, b); }

  Tensor scalar_mul(Tensor a, double c) {
    Matrix out = val(a);
    for (auto& v : out.data) v *= c;
    Tensor t = push(OpKind::ScalarMul, {a.id}, std::move(out));
    nodes_[t.id].c0 = c;
    return t;
  }

  Tensor relu(Tensor a) {
    Matrix out = val(a);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(OpKind::Relu, {a.id}, std::move(out));
  }

  Tensor row_softmax(Tensor a) {
    const Matrix& x = val(a);
    Matrix out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
      double mx = x.at(i, 0);
      for (int j = 1; j < x.cols; ++j) mx = std::max(mx, x.at(i, j));
      double z = 0.0;
      for (int j = 0; j < x.cols; ++j) {
        out.at(i, j) = std::exp(x.at(i, j) - mx);
        z += out.at(i, j);
      }
      for (int j = 0; j < x.cols; ++j) out.at(i, j) /= z;
    }
    return push(OpKind::RowSoftmax, {a.id}, std::move(out));
  }

  Tensor mean_rows(Tensor a) {
    const Matrix& x = val(a);
    Matrix out(1, x.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j) out.at(0, j) += x.at(i, j);
    for (auto& v : out.data) v /= x.rows;
    return push(OpKind::MeanRows, {a.id}, std::move(out));
  }

  Tensor mean_cols(Tensor a) {
    const Matrix& x = val(a);
    Matrix out(x.rows, 1);
    for (int i = 0; i < x.rows; ++i) {
      for (int j = 0; j < x.cols; ++j) out.at(i, 0) += x.at(i, j);
      out.at(i, 0) /= x.cols;
    }
    return push(OpKind::MeanCols, {a.id}, std::move(out));
  }

  Tensor hconcat(Tensor a, Tensor b) {
    const Matrix& x = val(a);
    const Matrix& y = val(b);
    if (x.rows != y.rows) throw std::invalid_argument("hconcat: row mismatch");
    Matrix out(x.rows, x.cols + y.cols);
    for (int i = 0; i < x.rows; ++i) {
      for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(i, j);
      for (int j = 0; j < y.cols; ++j) out.at(i, x.cols + j) = y.at(i, j);
    }
    return push(OpKind::HConcat, {a.id, b.id}, std::move(out));
  }

  Tensor sum_all(Tensor a) {
    double s = 0.0;
    for (double v : val(a).data) s += v;
    Matrix out(1, 1);
    out.data[0] = s;
    return push(OpKind::SumAll, {a.id}, std::move(out));
  }

  Tensor frobenius_sq(Tensor a) {
    double s = 0.0;
    for (double v : val(a).data) s += v * v;
    Matrix out(1, 1);
    out.data[0] = s;
    return push(OpKind::FrobSq, {a.id}, std::move(out));
  }

  Tensor log(Tensor a) {
    Matrix out = val(a);
    for (auto& v : out.data) {
      if (v <= 0.0) throw std::domain_error("log of non-positive value; clamp first");
      v = std::log(v);
    }
    return push(OpKind::Log, {a.id}, std::move(out));
  }

  Tensor clamp(Tensor a, double lo, double hi) {
    Matrix out = val(a);
    for (auto& v : out.data) v = v < lo ? lo : (v > hi ? hi : v);
    Tensor t = push(OpKind::Clamp, {a.id}, std::move(out));
    nodes_[t.id].c0 = lo;
    nodes_[t.id].c1 = hi;
    return t;
  }

  // columns [lo, hi)
  Tensor slice_cols(Tensor a, int lo, int hi) {
    const Matrix& x = val(a);
    if (lo < 0 || hi > x.cols || lo >= hi)
      throw std::invalid_argument("slice_cols: bad column range");
    Matrix out(x.rows, hi - lo);
    for (int i = 0; i < x.rows; ++i)
      for (int j = lo; j < hi; ++j) out.at(i, j - lo) = x.at(i, j);
    Tensor t = push(OpKind::SliceCols, {a.id}, std::move(out));
    nodes_[t.id].c0 = lo;
    nodes_[t.id].c1 = hi;
    return t;
  }

  Tensor repeat_rows(Tensor a, int n) {
    const Matrix& x = val(a);
    if (x.rows != 1) throw std::invalid_argument("repeat_rows: input must be 1 x c");
    Matrix out(n, x.cols);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(0, j);
    return push(OpKind::RepeatRows, {a.id}, std::move(out));
  }

  Tensor scalar_expand(Tensor a, int r, int c) {
    return push(OpKind::ScalarExpand, {a.id}, Matrix(r, c, val(a).scalar()));
  }

  Tensor min_all(Tensor a) {
    const Matrix& x = val(a);
    double m = x.data[0];
    for (double v : x.data) m = std::min(m, v);
    Matrix out(1, 1);
    out.data[0] = m;
    return push(OpKind::MinAll, {a.id}, std::move(out));
  }

  Tensor max_all(Tensor a) {
    const Matrix& x = val(a);
    double m = x.data[0];
    for (double v : x.data) m = std::max(m, v);
    Matrix out(1, 1);
    out.data[0] = m;
    return push(OpKind::MaxAll, {a.id}, std::move(out));
  }

  Tensor reciprocal(Tensor a) {
    Matrix out = val(a);
    for (auto& v : out.data) v = 1.0 / v;
    return push(OpKind::Reciprocal, {a.id}, std::move(out));
  }

  Tensor sqrt(Tensor a) {
    Matrix out = val(a);
    for (auto& v : out.data) {
      if (v < 0.0) throw std::domain_error("sqrt of negative value");
      v = std::sqrt(v);
    }
    return push(OpKind::Sqrt, {a.id}, std::move(out));
  }

  const Matrix& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  size_t node_count() const { return nodes_.size(); }

  // Gradient of a scalar loss w.r.t. every requires_grad node. The tape is
  // consumed: a second backward on the same tape is an error.
  GradMap backward(Tensor loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: loss not on this tape");
    if (!value(loss.id).is_scalar()) throw std::invalid_argument("backward: loss must be 1x1");
    if (consumed_) throw std::logic_error("backward: tape already consumed");
    consumed_ = true;

    std::vector<Matrix> grads(nodes_.size());
    std::vector<bool> has_grad(nodes_.size(), false);
    auto accum = [&](int id, const Matrix& g) {
      if (!nodes_[id].requires_grad) return;
      if (!has_grad[id]) {
        grads[id] = g;
        has_grad[id] = true;
      } else {
        for (size_t i = 0; i < g.data.size(); ++i) grads[id].data[i] += g.data[i];
      }
    };
    accum(loss.id, Matrix(1, 1, 1.0));

    for (int id = loss.id; id >= 0; --id) {
      if (!has_grad[id]) continue;
      const Node& n = nodes_[id];
      const Matrix& g = grads[id];
      switch (n.op) {
        case OpKind::Leaf:
          break;
        case OpKind::MatMul: {
          const Matrix& a = nodes_[n.in[0]].value;
          const Matrix& b = nodes_[n.in[1]].value;
          if (nodes_[n.in[0]].requires_grad) accum(n.in[0], tif::matmul(g, tif::transpose(b)));
          if (nodes_[n.in[1]].requires_grad) accum(n.in[1], tif::matmul(tif::transpose(a), g));
          break;
        }
        case OpKind::Transpose:
          accum(n.in[0], tif::transpose(g));
          break;
        case OpKind::Add:
          accum(n.in[0], g);
          accum(n.in[1], g);
          break;
        case OpKind::Sub: {
          accum(n.in[0], g);
          if (nodes_[n.in[1]].requires_grad) {
            Matrix neg = g;
            for (auto& v : neg.data) v = -v;
            accum(n.in[1], neg);
          }
          break;
        }
        case OpKind::Mul: {
          if (nodes_[n.in[0]].requires_grad) {
            Matrix ga = g;
            const Matrix& b = nodes_[n.in[1]].value;
            for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= b.data[i];
            accum(n.in[0], ga);
          }
          if (nodes_[n.in[1]].requires_grad) {
            Matrix gb = g;
            const Matrix& a = nodes_[n.in[0]].value;
            for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] *= a.data[i];
            accum(n.in[1], gb);
          }
          break;
        }
        case OpKind::ScalarMul: {
          Matrix ga = g;
          for (auto& v : ga.data) v *= n.c0;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::Relu: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga = g;
          for (size_t i = 0; i < ga.data.size(); ++i)
            if (x.data[i] <= 0.0) ga.data[i] = 0.0;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::RowSoftmax: {
          const Matrix& s = n.value;
          Matrix ga(s.rows, s.cols);
          for (int i = 0; i < s.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < s.cols; ++j) dot += g.at(i, j) * s.at(i, j);
            for (int j = 0; j < s.cols; ++j) ga.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
          }
          accum(n.in[0], ga);
          break;
        }
        case OpKind::MeanRows: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga(x.rows, x.cols);
          for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < x.cols; ++j) ga.at(i, j) = g.at(0, j) / x.rows;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::MeanCols: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga(x.rows, x.cols);
          for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < x.cols; ++j) ga.at(i, j) = g.at(i, 0) / x.cols;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::HConcat: {
          const Matrix& a = nodes_[n.in[0]].value;
          const Matrix& b = nodes_[n.in[1]].value;
          if (nodes_[n.in[0]].requires_grad) {
            Matrix ga(a.rows, a.cols);
            for (int i = 0; i < a.rows; ++i)
              for (int j = 0; j < a.cols; ++j) ga.at(i, j) = g.at(i, j);
            accum(n.in[0], ga);
          }
          if (nodes_[n.in[1]].requires_grad) {
            Matrix gb(b.rows, b.cols);
            for (int i = 0; i < b.rows; ++i)
              for (int j = 0; j < b.cols; ++j) gb.at(i, j) = g.at(i, a.cols + j);
            accum(n.in[1], gb);
          }
          break;
        }
        case OpKind::SumAll: {
          const Matrix& x = nodes_[n.in[0]].value;
          accum(n.in[0], Matrix(x.rows, x.cols, g.scalar()));
          break;
        }
        case OpKind::FrobSq: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga = x;
          double s = 2.0 * g.scalar();
          for (auto& v : ga.data) v *= s;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::Log: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga = g;
          for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= x.data[i];
          accum(n.in[0], ga);
          break;
        }
        case OpKind::Clamp: {
          const Matrix& x = nodes_[n.in[0]].value;
          Matrix ga = g;
          for (size_t i = 0; i < ga.data.size(); ++i)
            if (x.data[i] < n.c0 || x.data[i] > n.c1) ga.data[i] = 0.0;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::SliceCols: {
          const Matrix& x = nodes_[n.in[0]].value;
          int lo = static_cast<int>(n.c0);
          Matrix ga(x.rows, x.cols);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) ga.at(i, lo + j) = g.at(i, j);
          accum(n.in[0], ga);
          break;
        }
        case OpKind::RepeatRows: {
          Matrix ga(1, g.cols);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) ga.at(0, j) += g.at(i, j);
          accum(n.in[0], ga);
          break;
        }
        case OpKind::ScalarExpand: {
          Matrix ga(1, 1);
          for (double v : g.data) ga.data[0] += v;
          accum(n.in[0], ga);
          break;
        }
        case OpKind::MinAll:
        case OpKind::MaxAll: {
          // subgradient at the first extremal entry
          const Matrix& x = nodes_[n.in[0]].value;
          size_t arg = 0;
          for (size_t i = 1; i < x.data.size(); ++i) {
            bool better = n.op == OpKind::MinAll ? x.data[i] < x.data[arg] : x.data[i] > x.data[arg];
            if (better) arg = i;
          }
          Matrix ga(x.rows, x.cols);
          ga.data[arg] = g.scalar();
          accum(n.in[0], ga);
          break;
        }
        case OpKind::Reciprocal: {
          const Matrix& y = n.value;
          Matrix ga = g;
          for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= -y.data[i] * y.data[i];
          accum(n.in[0], ga);
          break;
        }
        case OpKind::Sqrt: {
          const Matrix& y = n.value;
          Matrix ga = g;
          for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= 0.5 / y.data[i];
          accum(n.in[0], ga);
          break;
        }
      }
    }

    GradMap out;
    for (size_t id = 0; id < nodes_.size(); ++id)
      if (nodes_[id].op == OpKind::Leaf && nodes_[id].requires_grad && has_grad[id])
        out.emplace(static_cast<int>(id), std::move(grads[id]));
    return out;
  }

 private:
  struct Node {
    OpKind op;
    std::vector<int> in;
    Matrix value;
    bool requires_grad = false;
    double c0 = 0.0, c1 = 0.0;  // op constants (clamp bounds, slice range, ...)
  };

  const Matrix& val(Tensor t) const {
    if (t.tape != this) throw std::invalid_argument("tensor belongs to another tape");
    return nodes_.at(t.id).value;
  }

  Tensor elementwise(OpKind op, Tensor a, Tensor b) {
    const Matrix& x = val(a);
    const Matrix& y = val(b);
    if (!x.same_shape(y)) throw std::invalid_argument("elementwise op: shape mismatch");
    Matrix out = x;
    switch (op) {
      case OpKind::Add:
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += y.data[i];
        break;
      case OpKind::Sub:
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= y.data[i];
        break;
      case OpKind::Mul:
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= y.data[i];
        break;
      default:
        throw std::logic_error("not an elementwise op");
    }
    return push(op, {a.id, b.id}, std::move(out));
  }

  Tensor push(OpKind op, std::vector<int> in, Matrix value, bool leaf_rg = false) {
    if (!value.finite()) throw std::domain_error("primitive produced non-finite values");
    Node n;
    n.op = op;
    n.in = std::move(in);
    n.value = std::move(value);
    n.requires_grad = leaf_rg;
    for (int i : n.in) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
    nodes_.push_back(std::move(n));
    return Tensor{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

inline const Matrix& Tensor::value() const { return tape->value(id); }

// Central-difference gradient estimate, the oracle used by every gradient
// check in the test suites.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                         const Matrix& at, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  Matrix grad(at.rows, at.cols);
  Matrix x = at;
  for (size_t i = 0; i < x.data.size(); ++i) {
    double keep = x.data[i];
    x.data[i] = keep + h;
    double fp = f(x);
    x.data[i] = keep - h;
    double fm = f(x);
    x.data[i] = keep;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("finite_difference_gradient: non-finite evaluation");
    grad.data[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace tif
