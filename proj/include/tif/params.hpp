#pragma once

// Named parameter registry shared by every module with learnable weights,
// plus the Adam update rule. Parameters are bound onto a fresh tape per
// forward pass; gradients come back keyed by tape node id and are folded
// into per-parameter accumulators here.

#include <stdexcept>
#include <string>
#include <vector>

#include "tif/autodiff.hpp"
#include "tif/matrix.hpp"

namespace tif {

struct Param {
  std::string name;
  Matrix value;
  bool trainable = true;
};

class ParamStore {
 public:
  int add(std::string name, Matrix value, bool trainable = true) {
    params_.push_back({std::move(name), std::move(value), trainable});
    return static_cast<int>(params_.size()) - 1;
  }
  Param& operator[](int i) { return params_.at(i); }
  const Param& operator[](int i) const { return params_.at(i); }
  int size() const { return static_cast<int>(params_.size()); }

  int find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (params_[i].name == name) return i;
    return -1;
  }

 private:
  std::vector<Param> params_;
};

// Maps parameter index -> tape node id for one forward pass.
struct ParamBinding {
  std::vector<Tensor> tensors;

  static ParamBinding bind(Tape& tape, const ParamStore& store, bool with_grad) {
    ParamBinding b;
    b.tensors.reserve(store.size());
    for (int i = 0; i < store.size(); ++i)
      b.tensors.push_back(tape.leaf(store[i].value, with_grad && store[i].trainable));
    return b;
  }

  Tensor operator[](int i) const { return tensors.at(i); }

  // Gradient map keyed by node id -> dense per-parameter gradients
  // (zero matrices for parameters the loss never touched).
  std::vector<Matrix> collect(const GradMap& grads, const ParamStore& store) const {
    std::vector<Matrix> out;
    out.reserve(store.size());
    for (int i = 0; i < store.size(); ++i) {
      auto it = grads.find(tensors[i].id);
      if (it != grads.end())
        out.push_back(it->second);
      else
        out.push_back(Matrix(store[i].value.rows, store[i].value.cols));
    }
    return out;
  }
};

class AdamOptimizer {
 public:
  AdamOptimizer(double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store, const std::vector<Matrix>& grads) {
    if (static_cast<int>(grads.size()) != store.size())
      throw std::invalid_argument("AdamOptimizer: gradient count mismatch");
    if (m_.empty()) {
      for (int i = 0; i < store.size(); ++i) {
        m_.push_back(Matrix(store[i].value.rows, store[i].value.cols));
        v_.push_back(Matrix(store[i].value.rows, store[i].value.cols));
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (int i = 0; i < store.size(); ++i) {
      if (!store[i].trainable) continue;
      auto& p = store[i].value.data;
      const auto& g = grads[i].data;
      for (size_t j = 0; j < p.size(); ++j) {
        m_[i].data[j] = beta1_ * m_[i].data[j] + (1.0 - beta1_) * g[j];
        v_[i].data[j] = beta2_ * v_[i].data[j] + (1.0 - beta2_) * g[j] * g[j];
        double mhat = m_[i].data[j] / bc1;
        double vhat = v_[i].data[j] / bc2;
        p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace tif
