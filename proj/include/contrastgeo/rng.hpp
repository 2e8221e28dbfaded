#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace contrastgeo {

/// Seedable 64-bit generator whose output sequence is fixed by the standard
/// (mt19937_64).  Real-valued draws use an explicit 53-bit conversion instead
/// of std::uniform_real_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace contrastgeo
