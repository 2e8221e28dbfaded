#pragma once

// Truncated Taylor arithmetic in three nilpotent seeds.
//
// A Jet3 carries the polynomial  sum_S c_S prod_{i in S} eps_i  over subsets S
// of {eps_0, eps_1, eps_2} with eps_i^2 = 0.  Seeding an input as
// p + eps_0 u + eps_1 v + eps_2 w and reading the coefficient of
// eps_0 eps_1 eps_2 yields the mixed directional derivative d_u d_v d_w f(p)
// exactly (to roundoff).  Identical seeds give identical coefficients, so the
// all-in-one mask still recovers pure third derivatives.

#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace contrastgeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a primitive produces a non-finite value or leaves its domain.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::string primitive, const std::string& what)
      : std::runtime_error(primitive + ": " + what), primitive_(std::move(primitive)) {}
  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

class Jet3 {
 public:
  static constexpr int kSeeds = 3;
  static constexpr int kTerms = 1 << kSeeds;
  static constexpr unsigned kAll = kTerms - 1;

  constexpr Jet3() = default;
  constexpr Jet3(double value) { c_[0] = value; }  // NOLINT(implicit)

  /// value + sum_i seed[i] eps_i
  static Jet3 seeded(double value, const std::array<double, kSeeds>& seed) {
    Jet3 j(value);
    for (int i = 0; i < kSeeds; ++i) j.c_[1u << i] = seed[i];
    return j;
  }

  double value() const { return c_[0]; }
  double operator[](unsigned mask) const { return c_[mask]; }
  double& operator[](unsigned mask) { return c_[mask]; }
  const std::array<double, kTerms>& coeffs() const { return c_; }

  bool is_constant() const {
    for (int s = 1; s < kTerms; ++s)
      if (c_[s] != 0.0) return false;
    return true;
  }

  Jet3& operator+=(const Jet3& o);
  Jet3& operator-=(const Jet3& o);
  Jet3& operator*=(const Jet3& o);
  Jet3& operator/=(const Jet3& o);

 private:
  std::array<double, kTerms> c_{};
};

Jet3 operator-(const Jet3& a);
Jet3 operator+(const Jet3& a, const Jet3& b);
Jet3 operator-(const Jet3& a, const Jet3& b);
Jet3 operator*(const Jet3& a, const Jet3& b);
Jet3 operator/(const Jet3& a, const Jet3& b);

Jet3 exp(const Jet3& a);
Jet3 log(const Jet3& a);
Jet3 sin(const Jet3& a);
Jet3 cos(const Jet3& a);
Jet3 sqrt(const Jet3& a);
Jet3 pow(const Jet3& a, int exponent);

/// Applies f(a0 + d) = f0 + f1 d + f2 d^2/2 + f3 d^3/6 where d is the
/// nilpotent part of a.  derivs = {f(a0), f'(a0), f''(a0), f'''(a0)}.
Jet3 compose_scalar(const Jet3& a, const std::array<double, 4>& derivs, const char* primitive);

using JetVec = std::vector<Jet3>;

/// Scalar smooth function of `arity` real inputs, evaluated in jet arithmetic.
class SmoothFn {
 public:
  using Evaluator = std::function<Jet3(std::span<const Jet3>)>;

  SmoothFn() = default;
  SmoothFn(int arity, Evaluator eval);

  int arity() const { return arity_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  Jet3 operator()(std::span<const Jet3> x) const;
  double operator()(const Vec& x) const;

 private:
  int arity_ = 0;
  Evaluator eval_;
};

/// Vector-valued smooth map R^arity -> R^outputs.
class VectorFn {
 public:
  using Evaluator = std::function<JetVec(std::span<const Jet3>)>;

  VectorFn() = default;
  VectorFn(int arity, int outputs, Evaluator eval);

  int arity() const { return arity_; }
  int outputs() const { return outputs_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  JetVec operator()(std::span<const Jet3> x) const;
  Vec operator()(const Vec& x) const;

  static VectorFn constant(int arity, const Vec& value);
  static VectorFn identity(int n);
  static VectorFn linear(const Mat& a);

 private:
  int arity_ = 0;
  int outputs_ = 0;
  Evaluator eval_;
};

JetVec to_jets(const Vec& p);

/// p + sum_k eps_k dirs[k]; at most three directions.
JetVec seed_point(const Vec& p, std::span<const Vec> dirs);

double deriv1(const SmoothFn& f, const Vec& p, const Vec& v);
double deriv2(const SmoothFn& f, const Vec& p, const Vec& v, const Vec& w);
double deriv3(const SmoothFn& f, const Vec& p, const Vec& u, const Vec& v, const Vec& w);

Vec gradient(const SmoothFn& f, const Vec& p);
Mat hessian(const SmoothFn& f, const Vec& p);
Mat jacobian(const VectorFn& f, const Vec& p);

}  // namespace contrastgeo
