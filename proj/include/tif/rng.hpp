#pragma once

// Seeded RNG wrapper and common init/sampling helpers. Per-item streams are
// derived with splitmix64 so generation order does not depend on scheduling.

#include <cstdint>
#include <random>

#include "tif/matrix.hpp"

namespace tif {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

  Matrix uniform_matrix(int r, int c, double lo, double hi) {
    Matrix m(r, c);
    for (auto& v : m.data) v = uniform(lo, hi);
    return m;
  }
  Matrix normal_matrix(int r, int c, double mean, double stddev) {
    Matrix m(r, c);
    for (auto& v : m.data) v = normal(mean, stddev);
    return m;
  }
  // symmetric uniform init in +-sqrt(6/(fan_in+fan_out))
  Matrix glorot_matrix(int fan_in, int fan_out) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    return uniform_matrix(fan_in, fan_out, -limit, limit);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tif
