#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "contrastgeo/jet.hpp"
#include "contrastgeo/models.hpp"
#include "oracles/fd.hpp"
#include "support/zoo.hpp"

using namespace contrastgeo;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

SmoothFn cube() {
  return SmoothFn(1, [](std::span<const Jet3> x) { return x[0] * x[0] * x[0]; });
}

}  // namespace

TEST(Jets, FirstDerivativeOfCube) { EXPECT_DOUBLE_EQ(deriv1(cube(), v1(2.0), v1(1.0)), 12.0); }

TEST(Jets, ConstantHasZeroDerivatives) {
  SmoothFn c(3, [](std::span<const Jet3>) { return Jet3(5.0); });
  const Vec p = Vec::Random(3), v = Vec::Random(3);
  EXPECT_EQ(deriv1(c, p, v), 0.0);
  EXPECT_EQ(deriv2(c, p, v, v), 0.0);
  EXPECT_EQ(deriv3(c, p, v, v, v), 0.0);
}

TEST(Jets, KlGradientVanishesOnDiagonalInSecondSlot) {
  const ModelDescriptor m = build("gaussian_kl");
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const Vec th = m.contrast.domain().sample(rng);
    Vec p(4);
    p << th, th;
    Vec v = Vec::Zero(4);
    v.tail(2) = testzoo::random_unit(2, rng);
    const double fd = oracle::d1([&](const Vec& x) { return m.contrast(x); }, p, v, 1e-5);
    EXPECT_NEAR(fd, 0.0, 1e-9);
    EXPECT_NEAR(deriv1(m.contrast.fn(), p, v), 0.0, 1e-14);
  }
}

TEST(Jets, MixedSecondDerivative) {
  SmoothFn f(2, [](std::span<const Jet3> x) { return x[0] * x[0] * x[1]; });
  EXPECT_DOUBLE_EQ(deriv2(f, v2(1, 1), v2(1, 0), v2(0, 1)), 2.0);
  SmoothFn half_sq(1, [](std::span<const Jet3> x) { return 0.5 * x[0] * x[0]; });
  EXPECT_DOUBLE_EQ(deriv2(half_sq, v1(0.3), v1(1), v1(1)), 1.0);
}

TEST(Jets, QuadraticContrastHessianIsIdentityInFirstSlot) {
  const ModelDescriptor m = build("quad_euclid", {{"n", "3"}});
  Vec p(6);
  p << 0.1, -0.4, 2.0, 0.1, -0.4, 2.0;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      EXPECT_DOUBLE_EQ(deriv2(m.contrast.fn(), p, Vec::Unit(6, j), Vec::Unit(6, k)), j == k ? 1.0 : 0.0);
}

TEST(Jets, ThirdDerivatives) {
  EXPECT_DOUBLE_EQ(deriv3(cube(), v1(0), v1(1), v1(1), v1(1)), 6.0);
  SmoothFn q(2, [](std::span<const Jet3> x) { return 3.0 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1]; });
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    const Vec p = rng.uniform_vector(2, -2, 2);
    EXPECT_EQ(deriv3(q, p, rng.uniform_vector(2, -1, 1), rng.uniform_vector(2, -1, 1), rng.uniform_vector(2, -1, 1)),
              0.0);
  }
}

TEST(Jets, WeightedSingularMixedThirdDerivative) {
  // coordinates (x1, z1, x2, z2); d/dx2 d/dx2 d/dz1 of e^{z1+z2}(x1-x2)^2/2 = e^{z1+z2}
  const ModelDescriptor m = build("weighted_singular");
  Vec p(4);
  p << 0.4, 0.0, 0.4, 0.0;
  EXPECT_NEAR(deriv3(m.contrast.fn(), p, Vec::Unit(4, 2), Vec::Unit(4, 2), Vec::Unit(4, 1)), 1.0, 1e-15);
}

TEST(Jets, Jacobians) {
  EXPECT_TRUE(jacobian(VectorFn::identity(3), Vec::Random(3)).isApprox(Mat::Identity(3, 3)));
  Mat a(2, 3);
  a << 1, 2, 3, -4, 5, 0.5;
  EXPECT_TRUE(jacobian(VectorFn::linear(a), Vec::Random(3)).isApprox(a));
  VectorFn f(2, 2, [](std::span<const Jet3> x) { return JetVec{x[0] * x[1], x[0] + x[1]}; });
  Mat expected(2, 2);
  expected << 3, 2, 1, 1;
  EXPECT_EQ(jacobian(f, v2(2, 3)), expected);
}

TEST(Jets, DimensionMismatchThrows) {
  EXPECT_THROW(deriv1(cube(), v2(1, 2), v2(1, 0)), std::invalid_argument);
  EXPECT_THROW(deriv2(cube(), v1(1), v2(1, 0), v1(1)), std::invalid_argument);
}

TEST(Jets, NonFiniteEvaluationNamesPrimitive) {
  SmoothFn f(1, [](std::span<const Jet3> x) { return log(x[0]); });
  try {
    deriv1(f, v1(-1.0), v1(1.0));
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.primitive(), "log");
  }
  SmoothFn g(1, [](std::span<const Jet3> x) { return Jet3(1.0) / (x[0] - 1.0); });
  EXPECT_THROW(deriv2(g, v1(1.0), v1(1), v1(1)), EvaluationError);
}

TEST(Jets, ZeroSeedReproducesPlainEvaluation) {
  const ModelDescriptor m = build("gaussian_kl");
  const Vec p = (Vec(4) << 0.3, 1.2, -0.5, 0.9).finished();
  const Jet3 j = m.contrast.fn()(std::span<const Jet3>(to_jets(p)));
  EXPECT_TRUE(j.is_constant());
  const double mu = -0.5 - 0.3;
  EXPECT_NEAR(j.value(), std::log(0.9 / 1.2) + (1.2 * 1.2 + mu * mu) / (2 * 0.81) - 0.5, 1e-15);
}

// Property: symmetry under permutations of directions and multilinearity.
TEST(JetsProperty, PermutationSymmetryAndLinearity) {
  Rng rng(5);
  for (const auto& c : testzoo::all_cases()) {
    const ModelDescriptor m = build(c.name, c.params);
    const SmoothFn& f = m.contrast.fn();
    const int n = f.arity();
    for (int t = 0; t < 20; ++t) {
      const Vec p = testzoo::random_element(m.contrast, rng);
      const Vec u = testzoo::random_unit(n, rng), v = testzoo::random_unit(n, rng), w = testzoo::random_unit(n, rng);
      const double uv = deriv2(f, p, u, v), vu = deriv2(f, p, v, u);
      EXPECT_LE(std::abs(uv - vu), 1e-12 * std::max(1.0, std::abs(uv))) << c.label();
      const std::array<double, 6> perms = {deriv3(f, p, u, v, w), deriv3(f, p, u, w, v), deriv3(f, p, v, u, w),
                                           deriv3(f, p, v, w, u), deriv3(f, p, w, u, v), deriv3(f, p, w, v, u)};
      for (double x : perms) EXPECT_LE(std::abs(x - perms[0]), 1e-12 * std::max(1.0, std::abs(perms[0]))) << c.label();
      const double a = 1.7, b = -0.6;
      const double lin = deriv3(f, p, a * u + b * w, v, w);
      const double sep = a * deriv3(f, p, u, v, w) + b * deriv3(f, p, w, v, w);
      EXPECT_LE(std::abs(lin - sep), 1e-11 * std::max(1.0, std::abs(sep))) << c.label();
    }
  }
}

// Property: agreement with the finite-difference oracle on every zoo contrast.
TEST(JetsProperty, FiniteDifferenceOracleAgreement) {
  Rng rng(8);
  for (const auto& c : testzoo::all_cases()) {
    const ModelDescriptor m = build(c.name, c.params);
    const SmoothFn& f = m.contrast.fn();
    const oracle::Fn plain = [&](const Vec& x) { return f(x); };
    const int n = f.arity();
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Vec p = testzoo::random_element(m.contrast, rng);
      const Vec u = testzoo::random_unit(n, rng), v = testzoo::random_unit(n, rng), w = testzoo::random_unit(n, rng);
      // the entropy chart sits within 0.1 of the simplex boundary, where third
      // derivatives reach a few hundred; one more extrapolation level there
      const bool entropy = c.params.count("psi") && c.params.at("psi") == "negentropy";
      const double h = entropy ? 8e-3 : 1e-2;
      const int levels = entropy ? 3 : 2;
      worst = std::max({worst, std::abs(deriv1(f, p, u) - oracle::d1(plain, p, u, h, levels)),
                        std::abs(deriv2(f, p, u, v) - oracle::d2(plain, p, u, v, h, levels)),
                        std::abs(deriv3(f, p, u, v, w) - oracle::d3(plain, p, u, v, w, h, levels))});
    }
    EXPECT_LE(worst, 1e-6) << c.label();
  }
}
