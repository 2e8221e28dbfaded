#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "contrastgeo/groupoid.hpp"
#include "contrastgeo/models.hpp"
#include "oracles/fd.hpp"
#include "support/zoo.hpp"

using namespace contrastgeo;

namespace {

Vec cat(const Vec& a, const Vec& b) {
  Vec r(a.size() + b.size());
  r << a, b;
  return r;
}

CMat rotation(double t) {
  CMat r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

double lrz(const ContrastFunction& f, const Vec& m, std::initializer_list<Direction> dirs) {
  const std::vector<Direction> v(dirs);
  return lrz_derivative(f, m, v);
}

// Pair groupoid: X^L moves xi by +X and X^R moves zeta by -X, so for constant
// directions an LLR pattern is a mixed partial of F(m - u Z, m + t X + s Y).
double pair_oracle(const ContrastFunction& f, const Vec& m, const std::vector<Direction>& dirs) {
  const int n = static_cast<int>(m.size());
  std::vector<Vec> d;
  for (const auto& x : dirs) d.push_back(x.side == Side::Left ? cat(Vec::Zero(n), x.components)
                                                              : cat(-x.components, Vec::Zero(n)));
  const oracle::Fn fn = [&](const Vec& g) { return f(g); };
  const Vec p = cat(m, m);
  if (d.size() == 2) return oracle::d2(fn, p, d[0], d[1]);
  return oracle::d3(fn, p, d[0], d[1], d[2]);
}

}  // namespace

TEST(PairGroupoid, ComposeAndInverse) {
  const PairGroupoid g(2);
  const Vec a = Vec::Random(2), b = Vec::Random(2), c = Vec::Random(2);
  EXPECT_EQ(g.compose(cat(a, b), cat(b, c)), cat(a, c));
  EXPECT_THROW(g.compose(cat(a, b), cat(c, a)), NonComposableError);
  EXPECT_EQ(g.inverse(cat(a, b)), cat(b, a));
  EXPECT_EQ(g.inverse(g.unit(a)), g.unit(a));
  EXPECT_EQ(g.source(cat(a, b)), b);
  EXPECT_EQ(g.target(cat(a, b)), a);
  EXPECT_THROW(PairGroupoid(0), std::invalid_argument);
}

TEST(PairGroupoid, AssociativityOnRandomTriples) {
  const PairGroupoid g(3);
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const Vec a = rng.uniform_vector(3, -5, 5), b = rng.uniform_vector(3, -5, 5), c = rng.uniform_vector(3, -5, 5),
              d = rng.uniform_vector(3, -5, 5);
    const Vec x = cat(a, b), y = cat(b, c), z = cat(c, d);
    ASSERT_EQ(g.compose(g.compose(x, y), z), g.compose(x, g.compose(y, z)));
  }
}

TEST(MatrixGroup, InverseAndComposition) {
  const MatrixLieGroup so2 = MatrixLieGroup::special_orthogonal(2);
  const Vec r = so2.from_matrix(rotation(0.7));
  EXPECT_LE((so2.to_matrix(so2.inverse(r)) - rotation(-0.7)).norm(), 1e-15);
  EXPECT_LE((so2.to_matrix(so2.compose(r, so2.inverse(r))) - CMat::Identity(2, 2)).norm(), 1e-15);
  EXPECT_EQ(so2.inverse(so2.unit(Vec(0))), so2.unit(Vec(0)));
  const MatrixLieGroup u3 = MatrixLieGroup::unitary(3);
  Rng rng(1);
  const Vec g = u3.random_element(rng);
  EXPECT_LE((u3.to_matrix(u3.compose(g, u3.inverse(g))) - CMat::Identity(3, 3)).norm(), 1e-13);
}

TEST(MatrixGroup, ExponentialMatchesSeries) {
  const MatrixLieGroup u2 = MatrixLieGroup::unitary(2);
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const Vec c = rng.uniform_vector(4, -1.5, 1.5);
    const CMat series = oracle::expm_series(u2.algebra_element(c));
    EXPECT_LE((u2.to_matrix(u2.exp(c)) - series).norm(), 1e-13 * series.norm());
  }
}

TEST(MatrixGroup, RejectsBadBases) {
  CMat a = CMat::Zero(2, 2), b = CMat::Zero(2, 2);
  a(0, 1) = 1.0;
  b(0, 1) = 2.0;
  EXPECT_THROW(MatrixLieGroup({a, b}), std::invalid_argument);
  CMat c = CMat::Zero(2, 2);
  c(1, 0) = 1.0;
  EXPECT_THROW(MatrixLieGroup({a, c}), std::invalid_argument);  // [a, c] is not in the span
  EXPECT_THROW(MatrixLieGroup({}), std::invalid_argument);
}

TEST(DualContrast, SymmetricQuadraticIsSelfDual) {
  const ContrastFunction f = build("quad_euclid", {{"n", "2"}}).contrast;
  const ContrastFunction fs = dual_contrast(f);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vec g = rng.uniform_vector(4, -3, 3);
    EXPECT_EQ(fs(g), f(g));
  }
}

TEST(DualContrast, GaussianDualIsReverseKl) {
  const ContrastFunction f = build("gaussian_kl").contrast;
  const ContrastFunction fs = dual_contrast(f);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vec a = f.domain().sample(rng), b = f.domain().sample(rng);
    const double reverse = std::log(a[1] / b[1]) + (b[1] * b[1] + (a[0] - b[0]) * (a[0] - b[0])) / (2 * a[1] * a[1]) - 0.5;
    EXPECT_NEAR(fs(cat(a, b)), reverse, 1e-14);
    EXPECT_EQ(dual_contrast(fs)(cat(a, b)), f(cat(a, b)));
  }
}

TEST(DualContrast, InvolutionOnEveryModel) {
  Rng rng(12);
  for (const auto& c : testzoo::all_cases()) {
    const ContrastFunction f = build(c.name, c.params).contrast;
    const ContrastFunction ff = dual_contrast(dual_contrast(f));
    for (int t = 0; t < 10; ++t) {
      const Vec g = testzoo::random_element(f, rng);
      EXPECT_EQ(ff(g), f(g)) << c.label();
    }
  }
}

TEST(Lrz, QuadraticMetricIsKronecker) {
  const ContrastFunction f = build("quad_euclid", {{"n", "3"}}).contrast;
  const Vec m = Vec::Random(3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      EXPECT_EQ(lrz(f, m, {{Vec::Unit(3, j), Side::Left}, {Vec::Unit(3, k), Side::Left}}), j == k ? 1.0 : 0.0);
}

TEST(Lrz, GaussianMetricAgreesAcrossSides) {
  const ContrastFunction f = build("gaussian_kl").contrast;
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    const Vec m = f.domain().sample(rng);
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        const Vec ej = Vec::Unit(2, j), ek = Vec::Unit(2, k);
        const double ll = lrz(f, m, {{ej, Side::Left}, {ek, Side::Left}});
        EXPECT_NEAR(ll, lrz(f, m, {{ej, Side::Left}, {ek, Side::Right}}), 1e-10);
        EXPECT_NEAR(ll, lrz(f, m, {{ej, Side::Right}, {ek, Side::Right}}), 1e-10);
      }
    }
  }
}

TEST(Lrz, KernelDirectionKillsSingularPattern) {
  const ContrastFunction f = build("singular_r3").contrast;
  Rng rng(9);
  const Vec ez = Vec::Unit(3, 2);
  for (int t = 0; t < 10; ++t) {
    const Vec m = f.domain().sample(rng);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        EXPECT_EQ(lrz(f, m, {{Vec::Unit(3, i), Side::Left}, {Vec::Unit(3, j), Side::Left}, {ez, Side::Right}}), 0.0);
  }
}

TEST(Lrz, PatternLengthIsBounded) {
  const ContrastFunction f = build("quad_euclid", {{"n", "1"}}).contrast;
  const Vec e = Vec::Ones(1);
  EXPECT_THROW(lrz(f, e, {{e, Side::Left}, {e, Side::Left}, {e, Side::Left}, {e, Side::Left}}), std::invalid_argument);
  EXPECT_THROW(lrz(f, e, {}), std::invalid_argument);
}

// The sign conventions must realize X^L(f o s) = (X f) o s and X^R(f o t) = -(X f) o t.
TEST(Lrz, InvariantFunctionIdentities) {
  auto backend = std::make_shared<PairGroupoid>(2);
  auto f = [](const auto& x) { return sin(x[0]) * x[1] + x[1] * x[1]; };
  const ContrastFunction on_source(backend, SmoothFn(4, [f](std::span<const Jet3> g) { return f(g.subspan(2)); }));
  const ContrastFunction on_target(backend, SmoothFn(4, [f](std::span<const Jet3> g) { return f(g.subspan(0, 2)); }));
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const Vec m = rng.uniform_vector(2, -2, 2), x = rng.uniform_vector(2, -1, 1);
    const double xf = x[0] * std::cos(m[0]) * m[1] + x[1] * (std::sin(m[0]) + 2 * m[1]);
    const Direction l[] = {{x, Side::Left}};
    const Direction r[] = {{x, Side::Right}};
    EXPECT_NEAR(lrz_derivative(on_source, m, l), xf, 1e-14);
    EXPECT_NEAR(lrz_derivative(on_target, m, r), -xf, 1e-14);
    EXPECT_EQ(lrz_derivative(on_source, m, r), 0.0);
    EXPECT_EQ(lrz_derivative(on_target, m, l), 0.0);
  }
}

TEST(Lrz, PairPatternsMatchFiniteDifferences) {
  Rng rng(31);
  for (const char* name : {"gaussian_kl", "fubini_study", "weighted_singular"}) {
    const ContrastFunction f = build(name).contrast;
    const int n = f.rank();
    for (int t = 0; t < 10; ++t) {
      const Vec m = f.domain().sample(rng);
      std::vector<Direction> d = {{testzoo::random_unit(n, rng), Side::Left},
                                  {testzoo::random_unit(n, rng), Side::Left},
                                  {testzoo::random_unit(n, rng), Side::Right}};
      EXPECT_NEAR(lrz_derivative(f, m, d), pair_oracle(f, m, d), 1e-7) << name;
      d.pop_back();
      EXPECT_NEAR(lrz_derivative(f, m, d), pair_oracle(f, m, d), 1e-7) << name;
    }
  }
}

// Group: X^L Y^L Z^R F at e is d^3/du dt ds of F(exp(uZ) exp(tX) exp(sY)).
TEST(Lrz, GroupPatternsMatchMatrixSeriesOracle) {
  for (const char* group : {"u", "su"}) {
    const ModelDescriptor model = build("unitary_group", {{"k", "2"}, {"group", group}});
    const auto& g = dynamic_cast<const MatrixLieGroup&>(model.contrast.backend());
    const int d = g.rank();
    Rng rng(41);
    for (int t = 0; t < 10; ++t) {
      const Vec x = testzoo::random_unit(d, rng), y = testzoo::random_unit(d, rng), z = testzoo::random_unit(d, rng);
      const CMat bx = g.algebra_element(x), by = g.algebra_element(y), bz = g.algebra_element(z);
      const auto value = [&](const CMat& m) { return 1.0 - m.trace().real() / 2.0; };
      const double llr = oracle::d3_params([&](double u, double a, double s) {
        return value(oracle::expm_series(u * bz) * oracle::expm_series(a * bx) * oracle::expm_series(s * by));
      });
      const Direction pat[] = {{x, Side::Left}, {y, Side::Left}, {z, Side::Right}};
      EXPECT_NEAR(lrz_derivative(model.contrast, Vec(0), pat), llr, 1e-8);
      const double lr = oracle::d2_params(
          [&](double a, double s) { return value(oracle::expm_series(s * by) * oracle::expm_series(a * bx)); });
      const Direction pat2[] = {{x, Side::Left}, {y, Side::Right}};
      EXPECT_NEAR(lrz_derivative(model.contrast, Vec(0), pat2), lr, 1e-8);
    }
  }
}

TEST(Anchor, PairIsIdentityGroupIsZero) {
  const PairGroupoid p(3);
  const Vec x = (Vec(3) << 1, 2, 3).finished();
  EXPECT_EQ(anchor(p, Vec::Zero(3), x), x);
  EXPECT_EQ(anchor(p, Vec::Zero(3), 2.5 * x), 2.5 * anchor(p, Vec::Zero(3), x));
  const MatrixLieGroup g = MatrixLieGroup::unitary(2);
  EXPECT_EQ(anchor(g, Vec(0), Vec::Ones(4)), Vec::Zero(0));
}

TEST(Bracket, PairCommutators) {
  const PairGroupoid p(2);
  const Vec m = (Vec(2) << 0.3, -1.2).finished();
  const SectionField c1 = SectionField::constant(2, Vec::Unit(2, 0)), c2 = SectionField::constant(2, Vec::Ones(2));
  EXPECT_EQ(bracket(p, c1, c2, m), Vec::Zero(2));
  // X = x d/dy, Y = d/dx: [X, Y] = -d/dy
  const SectionField x(VectorFn(2, 2, [](std::span<const Jet3> q) { return JetVec{Jet3(0.0), q[0]}; }));
  EXPECT_EQ(bracket(p, x, c1, m), (Vec(2) << 0, -1).finished());
}

TEST(Bracket, So3StructureConstantsFromMatrixCommutators) {
  const MatrixLieGroup so3 = MatrixLieGroup::special_orthogonal(3);
  const auto& b = so3.basis();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Vec c = bracket(so3, SectionField::constant(0, Vec::Unit(3, i)), SectionField::constant(0, Vec::Unit(3, j)),
                            Vec(0));
      const CMat comm = b[i] * b[j] - b[j] * b[i];
      EXPECT_LE((so3.algebra_element(c) - comm).norm(), 1e-14);
      if (i != j) {
        // cross-product algebra: the bracket of two generators is +-1 times the third
        EXPECT_NEAR(c.cwiseAbs().sum(), 1.0, 1e-14);
        EXPECT_NEAR(c[3 - i - j], c.sum(), 1e-14);
      }
    }
  }
}

TEST(BracketProperty, LeibnizRule) {
  const PairGroupoid p(3);
  Rng rng(13);
  const SectionField x(VectorFn(3, 3, [](std::span<const Jet3> q) { return JetVec{q[1] * q[2], sin(q[0]), Jet3(1.0)}; }));
  const SectionField y(VectorFn(3, 3, [](std::span<const Jet3> q) { return JetVec{exp(0.3 * q[2]), q[0] * q[0], q[1]}; }));
  const SmoothFn f(3, [](std::span<const Jet3> q) { return cos(q[0]) + q[1] * q[2] * q[2]; });
  for (int t = 0; t < 100; ++t) {
    const Vec m = rng.uniform_vector(3, -1.5, 1.5);
    const Vec lhs = bracket(p, x, y.scaled(f), m);
    const Vec rhs = f(m) * bracket(p, x, y, m) + gradient(f, m).dot(anchor(p, m, x.at(m))) * y.at(m);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(CheckContrast, Examples) {
  Rng rng(1);
  EXPECT_TRUE(check_contrast(build("quad_euclid").contrast, 50, 1e-12, rng).passed);
  auto backend = std::make_shared<PairGroupoid>(1);
  const ContrastFunction bad(backend, SmoothFn(2, [](std::span<const Jet3> g) {
                               const Jet3 d = g[0] - g[1];
                               return d + 0.5 * d * d;
                             }),
                             Domain::box(Vec::Constant(1, -1), Vec::Constant(1, 1)));
  const ContrastReport r = check_contrast(bad, 10, 1e-9, rng);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.violations.size(), 10u);
  EXPECT_NEAR(r.max_differential, std::sqrt(2.0), 1e-14);  // dF = (1, -1) in (zeta, xi)
  EXPECT_TRUE(check_contrast(build("fubini_study").contrast, 50, 1e-9, rng).passed);
}

TEST(CheckContrastProperty, EveryZooModelPasses) {
  Rng rng(77);
  for (const auto& c : testzoo::all_cases()) {
    const ContrastReport r = check_contrast(build(c.name, c.params).contrast, 100, 1e-9, rng);
    EXPECT_TRUE(r.passed) << c.label() << " value " << r.max_value << " differential " << r.max_differential;
  }
}

TEST(MatrixGroup, NonUnitaryInverseInJetArithmetic) {
  // affine group of the line: span{E11, E12}, [E11, E12] = E12
  CMat a = CMat::Zero(2, 2), b = CMat::Zero(2, 2);
  a(0, 0) = 1.0;
  b(0, 1) = 1.0;
  const MatrixLieGroup aff({a, b}, "aff");
  const Vec g = aff.exp((Vec(2) << 0.4, -1.3).finished());
  const Vec ginv = aff.inverse(g);
  EXPECT_LE((aff.to_matrix(aff.compose(g, ginv)) - CMat::Identity(2, 2)).norm(), 1e-15);
  const JetVec jets = aff.inverse(std::span<const Jet3>(to_jets(g)));
  for (std::size_t i = 0; i < jets.size(); ++i) EXPECT_NEAR(jets[i].value(), ginv[i], 1e-15);
  // d/dt (g exp(tX))^{-1} at 0 = -X g^{-1}
  JetVec seeded = to_jets(g);
  const SectionField x = SectionField::constant(0, Vec::Unit(2, 1));
  const JetVec pushed = aff.push(std::span<const Jet3>(seeded), x, Side::Left, 0);
  const JetVec inv = aff.inverse(std::span<const Jet3>(pushed));
  const Vec expected = aff.from_matrix(-b * aff.to_matrix(ginv));
  for (std::size_t i = 0; i < inv.size(); ++i) EXPECT_NEAR(inv[i][1], expected[i], 1e-14);
}
