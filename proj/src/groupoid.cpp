#include "contrastgeo/groupoid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

namespace contrastgeo {

namespace {

using Complex = std::complex<double>;

/// eps_seed * j, dropping terms that already carry the seed.
Jet3 times_seed(const Jet3& j, int seed) {
  const unsigned bit = 1u << seed;
  Jet3 r;
  for (unsigned m = 0; m < Jet3::kTerms; ++m) {
    if (m & bit) r[m] = j[m ^ bit];
  }
  return r;
}

struct CJet {
  Jet3 re, im;
};

CJet operator+(const CJet& a, const CJet& b) { return {a.re + b.re, a.im + b.im}; }
CJet operator-(const CJet& a, const CJet& b) { return {a.re - b.re, a.im - b.im}; }
CJet operator*(const CJet& a, const CJet& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
CJet operator*(const CJet& a, Complex c) {
  return {a.re * c.real() - a.im * c.imag(), a.re * c.imag() + a.im * c.real()};
}
CJet operator/(const CJet& a, const CJet& b) {
  const Jet3 den = b.re * b.re + b.im * b.im;
  return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}

using CJetMatrix = std::vector<std::vector<CJet>>;

CJetMatrix unpack(std::span<const Jet3> g, int k) {
  CJetMatrix m(k, std::vector<CJet>(k));
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) m[r][c] = {g[2 * (r * k + c)], g[2 * (r * k + c) + 1]};
  return m;
}

JetVec pack(const CJetMatrix& m) {
  const int k = static_cast<int>(m.size());
  JetVec g(2 * k * k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      g[2 * (r * k + c)] = m[r][c].re;
      g[2 * (r * k + c) + 1] = m[r][c].im;
    }
  }
  return g;
}

double magnitude(const CJet& z) { return std::hypot(z.re.value(), z.im.value()); }

}  // namespace

SectionField SectionField::scaled(const SmoothFn& f) const {
  if (f.arity() != base_dim()) throw std::invalid_argument("SectionField::scaled: arity mismatch");
  VectorFn x = fn_;
  return SectionField(VectorFn(base_dim(), rank(), [x, f](std::span<const Jet3> m) {
    JetVec v = x(m);
    const Jet3 s = f(m);
    for (auto& c : v) c = s * c;
    return v;
  }));
}

Domain Domain::box(const Vec& lo, const Vec& hi, bool bounded) {
  Domain d;
  d.sample = [lo, hi](Rng& rng) {
    Vec v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = rng.uniform(lo[i], hi[i]);
    return v;
  };
  d.contains = [lo, hi, bounded](const Vec& m) {
    if (m.size() != lo.size()) return false;
    if (!bounded) return m.allFinite();
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(m[i] >= lo[i] && m[i] <= hi[i])) return false;
    return true;
  };
  return d;
}

// ---------------------------------------------------------------------------
// Pair groupoid

PairGroupoid::PairGroupoid(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("pair groupoid dimension must be >= 1");
}

Vec PairGroupoid::unit(const Vec& m) const {
  if (m.size() != n_) throw std::invalid_argument("pair groupoid: base point dimension mismatch");
  Vec g(2 * n_);
  g << m, m;
  return g;
}

Vec PairGroupoid::compose(const Vec& g1, const Vec& g2) const {
  if (g1.size() != 2 * n_ || g2.size() != 2 * n_) throw std::invalid_argument("pair groupoid: element dimension");
  const Vec s1 = source(g1), t2 = target(g2);
  const double scale = std::max({1.0, s1.cwiseAbs().maxCoeff(), t2.cwiseAbs().maxCoeff()});
  if ((s1 - t2).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NonComposableError("pair groupoid: source of first arrow differs from target of second");
  Vec g(2 * n_);
  g << target(g1), source(g2);
  return g;
}

Vec PairGroupoid::inverse(const Vec& g) const {
  Vec r(2 * n_);
  r << source(g), target(g);
  return r;
}

JetVec PairGroupoid::inverse(std::span<const Jet3> g) const {
  JetVec r(g.begin() + n_, g.end());
  r.insert(r.end(), g.begin(), g.begin() + n_);
  return r;
}

Vec PairGroupoid::anchor(const Vec& m, const Vec& x) const {
  if (m.size() != n_ || x.size() != n_) throw std::invalid_argument("pair groupoid anchor: dimension mismatch");
  return x;
}

Vec PairGroupoid::bracket(const SectionField& x, const SectionField& y, const Vec& m) const {
  const Vec xv = x.at(m), yv = y.at(m);
  return jacobian(y.fn(), m) * xv - jacobian(x.fn(), m) * yv;
}

JetVec PairGroupoid::push(std::span<const Jet3> g, const SectionField& x, Side side, int seed) const {
  JetVec r(g.begin(), g.end());
  if (side == Side::Left) {
    const JetVec v = x.at(g.subspan(n_, n_));
    for (int i = 0; i < n_; ++i) r[n_ + i] += times_seed(v[i], seed);
  } else {
    const JetVec v = x.at(g.subspan(0, n_));
    for (int i = 0; i < n_; ++i) r[i] -= times_seed(v[i], seed);
  }
  return r;
}

JetVec PairGroupoid::push_base(std::span<const Jet3> g, const Vec& tangent, int seed) const {
  JetVec r(g.begin(), g.end());
  const unsigned bit = 1u << seed;
  for (int i = 0; i < n_; ++i) {
    r[i][bit] += tangent[i];
    r[n_ + i][bit] += tangent[i];
  }
  return r;
}

// ---------------------------------------------------------------------------
// Matrix Lie group

MatrixLieGroup::MatrixLieGroup(std::vector<CMat> basis, std::string name)
    : basis_(std::move(basis)), name_(std::move(name)) {
  if (basis_.empty()) throw std::invalid_argument("matrix group: empty algebra basis");
  k_ = static_cast<int>(basis_.front().rows());
  realified_basis_.resize(2 * k_ * k_, static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t a = 0; a < basis_.size(); ++a) {
    if (basis_[a].rows() != k_ || basis_[a].cols() != k_)
      throw std::invalid_argument("matrix group: basis matrices must be square of equal size");
    realified_basis_.col(static_cast<Eigen::Index>(a)) = from_matrix(basis_[a]);
  }
  unitary_ = std::all_of(basis_.begin(), basis_.end(), [](const CMat& b) {
    return (b + b.adjoint()).norm() <= 1e-14 * std::max(1.0, b.norm());
  });
  Eigen::FullPivLU<Mat> lu(realified_basis_);
  if (lu.rank() != static_cast<Eigen::Index>(basis_.size()))
    throw std::invalid_argument("matrix group: algebra basis is linearly dependent");
  for (const auto& a : basis_) {
    for (const auto& b : basis_) {
      const CMat c = a * b - b * a;
      const Vec cv = from_matrix(c);
      const Vec coords = realified_basis_.colPivHouseholderQr().solve(cv);
      if ((realified_basis_ * coords - cv).norm() > 1e-10 * std::max(1.0, cv.norm()))
        throw std::invalid_argument("matrix group: algebra basis is not closed under commutators");
    }
  }
}

MatrixLieGroup MatrixLieGroup::unitary(int k) {
  if (k < 1) throw std::invalid_argument("unitary group size must be >= 1");
  const Complex i(0.0, 1.0);
  std::vector<CMat> basis;
  for (int j = 0; j < k; ++j) {
    CMat e = CMat::Zero(k, k);
    e(j, j) = i;
    basis.push_back(e);
  }
  for (int j = 0; j < k; ++j) {
    for (int l = j + 1; l < k; ++l) {
      CMat a = CMat::Zero(k, k);
      a(j, l) = 1.0;
      a(l, j) = -1.0;
      basis.push_back(a);
      CMat s = CMat::Zero(k, k);
      s(j, l) = i;
      s(l, j) = i;
      basis.push_back(s);
    }
  }
  return MatrixLieGroup(std::move(basis), "U(" + std::to_string(k) + ")");
}

MatrixLieGroup MatrixLieGroup::special_orthogonal(int k) {
  if (k < 2) throw std::invalid_argument("special orthogonal group size must be >= 2");
  std::vector<CMat> basis;
  for (int j = 0; j < k; ++j) {
    for (int l = j + 1; l < k; ++l) {
      CMat a = CMat::Zero(k, k);
      a(l, j) = 1.0;
      a(j, l) = -1.0;
      basis.push_back(a);
    }
  }
  return MatrixLieGroup(std::move(basis), "SO(" + std::to_string(k) + ")");
}

CMat MatrixLieGroup::to_matrix(const Vec& g) const {
  if (g.size() != 2 * k_ * k_) throw std::invalid_argument("matrix group: element dimension mismatch");
  CMat m(k_, k_);
  for (int r = 0; r < k_; ++r)
    for (int c = 0; c < k_; ++c) m(r, c) = Complex(g[2 * (r * k_ + c)], g[2 * (r * k_ + c) + 1]);
  return m;
}

Vec MatrixLieGroup::from_matrix(const CMat& m) const {
  Vec g(2 * k_ * k_);
  for (int r = 0; r < k_; ++r) {
    for (int c = 0; c < k_; ++c) {
      g[2 * (r * k_ + c)] = m(r, c).real();
      g[2 * (r * k_ + c) + 1] = m(r, c).imag();
    }
  }
  return g;
}

CMat MatrixLieGroup::algebra_element(const Vec& components) const {
  if (components.size() != rank()) throw std::invalid_argument("matrix group: algebra component count mismatch");
  CMat a = CMat::Zero(k_, k_);
  for (int i = 0; i < rank(); ++i) a += components[i] * basis_[i];
  return a;
}

Vec MatrixLieGroup::algebra_coordinates(const CMat& a, double tol) const {
  const Vec v = from_matrix(a);
  const Vec c = realified_basis_.colPivHouseholderQr().solve(v);
  if ((realified_basis_ * c - v).norm() > tol * std::max(1.0, v.norm()))
    throw std::domain_error("matrix group: commutator lies outside the algebra span");
  return c;
}

Vec MatrixLieGroup::exp(const Vec& components) const {
  const CMat a = algebra_element(components);
  return from_matrix(a.exp());
}

Vec MatrixLieGroup::random_element(Rng& rng, double scale) const {
  return exp(rng.uniform_vector(rank(), -scale, scale));
}

Vec MatrixLieGroup::unit(const Vec& m) const {
  if (m.size() != 0) throw std::invalid_argument("matrix group: base is a point");
  return from_matrix(CMat::Identity(k_, k_));
}

Vec MatrixLieGroup::compose(const Vec& g1, const Vec& g2) const {
  return from_matrix(to_matrix(g1) * to_matrix(g2));
}

Vec MatrixLieGroup::inverse(const Vec& g) const {
  const CMat m = to_matrix(g);
  if (unitary_) return from_matrix(m.adjoint());
  Eigen::FullPivLU<CMat> lu(m);
  if (!lu.isInvertible()) throw std::domain_error("matrix group: singular element");
  return from_matrix(lu.inverse());
}

JetVec MatrixLieGroup::inverse(std::span<const Jet3> g) const {
  if (unitary_) {
    JetVec r(g.size());
    for (int i = 0; i < k_; ++i) {
      for (int j = 0; j < k_; ++j) {
        r[2 * (i * k_ + j)] = g[2 * (j * k_ + i)];
        r[2 * (i * k_ + j) + 1] = -g[2 * (j * k_ + i) + 1];
      }
    }
    return r;
  }
  // Gauss-Jordan in complex jet arithmetic with partial pivoting on values.
  CJetMatrix a = unpack(g, k_);
  CJetMatrix inv(k_, std::vector<CJet>(k_));
  for (int i = 0; i < k_; ++i) inv[i][i].re = Jet3(1.0);
  for (int col = 0; col < k_; ++col) {
    int piv = col;
    for (int r = col + 1; r < k_; ++r)
      if (magnitude(a[r][col]) > magnitude(a[piv][col])) piv = r;
    if (magnitude(a[piv][col]) == 0.0) throw EvaluationError("inverse", "singular matrix");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const CJet p = a[col][col];
    for (int c = 0; c < k_; ++c) {
      a[col][c] = a[col][c] / p;
      inv[col][c] = inv[col][c] / p;
    }
    for (int r = 0; r < k_; ++r) {
      if (r == col) continue;
      const CJet f = a[r][col];
      for (int c = 0; c < k_; ++c) {
        a[r][c] = a[r][c] - f * a[col][c];
        inv[r][c] = inv[r][c] - f * inv[col][c];
      }
    }
  }
  return pack(inv);
}

Vec MatrixLieGroup::anchor(const Vec& m, const Vec& x) const {
  if (m.size() != 0 || x.size() != rank()) throw std::invalid_argument("matrix group anchor: dimension mismatch");
  return Vec(0);
}

Vec MatrixLieGroup::bracket(const SectionField& x, const SectionField& y, const Vec& m) const {
  const CMat a = algebra_element(x.at(m));
  const CMat b = algebra_element(y.at(m));
  return algebra_coordinates(a * b - b * a);
}

JetVec MatrixLieGroup::push(std::span<const Jet3> g, const SectionField& x, Side side, int seed) const {
  const CMat a = algebra_element(x.at(Vec(0)));
  const CJetMatrix m = unpack(g, k_);
  CJetMatrix out = m;
  for (int r = 0; r < k_; ++r) {
    for (int c = 0; c < k_; ++c) {
      CJet acc;
      for (int j = 0; j < k_; ++j) acc = acc + (side == Side::Left ? m[r][j] * a(j, c) : m[j][c] * a(r, j));
      out[r][c].re += times_seed(acc.re, seed);
      out[r][c].im += times_seed(acc.im, seed);
    }
  }
  return pack(out);
}

JetVec MatrixLieGroup::push_base(std::span<const Jet3> g, const Vec&, int) const {
  return JetVec(g.begin(), g.end());
}

// ---------------------------------------------------------------------------

ContrastFunction::ContrastFunction(std::shared_ptr<const GroupoidBackend> backend, SmoothFn fn, Domain domain)
    : backend_(std::move(backend)), fn_(std::move(fn)), domain_(std::move(domain)) {
  if (!backend_) throw std::invalid_argument("contrast function: missing backend");
  if (fn_.arity() != backend_->element_dim())
    throw std::invalid_argument("contrast function: arity " + std::to_string(fn_.arity()) +
                                " does not match groupoid element dimension " +
                                std::to_string(backend_->element_dim()));
  if (!domain_.sample) {
    const int n = backend_->base_dim();
    domain_ = Domain::box(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0));
  }
}

ContrastFunction dual_contrast(const ContrastFunction& f) {
  auto backend = f.backend_ptr();
  SmoothFn fn = f.fn();
  SmoothFn dual(fn.arity(), [backend, fn](std::span<const Jet3> g) {
    const JetVec inv = backend->inverse(g);
    return fn(std::span<const Jet3>(inv));
  });
  return ContrastFunction(backend, std::move(dual), f.domain());
}

double invariant_derivative(const ContrastFunction& f, const Vec& m, std::span<const InvariantStep> steps) {
  const GroupoidBackend& b = f.backend();
  if (steps.empty() || steps.size() > static_cast<std::size_t>(Jet3::kSeeds))
    throw std::invalid_argument("invariant derivative: pattern length must be 1, 2 or 3");
  bool base_allowed = true;
  JetVec g = to_jets(b.unit(m));
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const InvariantStep& st = steps[k];
    if (st.section.base_dim() != b.base_dim() || st.section.rank() != b.rank())
      throw std::invalid_argument("invariant derivative: section does not match the algebroid");
    const int seed = static_cast<int>(k);
    switch (st.kind) {
      case InvariantStep::Kind::Base:
        if (!base_allowed) throw std::invalid_argument("invariant derivative: base factors must come first");
        g = b.push_base(g, b.anchor(m, st.section.at(m)), seed);
        break;
      case InvariantStep::Kind::Left:
        base_allowed = false;
        g = b.push(g, st.section, Side::Left, seed);
        break;
      case InvariantStep::Kind::Right:
        base_allowed = false;
        g = b.push(g, st.section, Side::Right, seed);
        break;
    }
  }
  const Jet3 r = f(std::span<const Jet3>(g));
  return r[(1u << steps.size()) - 1];
}

double lrz_derivative(const ContrastFunction& f, const Vec& m, std::span<const Direction> pattern) {
  if (pattern.empty() || pattern.size() > 3)
    throw std::invalid_argument("lrz_derivative: pattern length must be 1, 2 or 3");
  std::vector<InvariantStep> steps;
  steps.reserve(pattern.size());
  for (const auto& d : pattern) {
    if (d.components.size() != f.rank()) throw std::invalid_argument("lrz_derivative: direction dimension mismatch");
    SectionField s = SectionField::constant(f.backend().base_dim(), d.components);
    steps.push_back(d.side == Side::Left ? InvariantStep::left(std::move(s)) : InvariantStep::right(std::move(s)));
  }
  return invariant_derivative(f, m, steps);
}

Vec anchor(const GroupoidBackend& backend, const Vec& m, const Vec& x) { return backend.anchor(m, x); }

Vec bracket(const GroupoidBackend& backend, const SectionField& x, const SectionField& y, const Vec& m) {
  return backend.bracket(x, y, m);
}

namespace {

std::pair<double, double> contrast_value_and_differential(const ContrastFunction& f, const Vec& m) {
  const GroupoidBackend& b = f.backend();
  const int d = b.rank();
  const int n = b.base_dim();
  const double value = f(b.unit(m));
  double sq = 0.0;
  for (int a = 0; a < d; ++a) {
    const Vec e = Vec::Unit(d, a);
    const Direction l[] = {{e, Side::Left}};
    const Direction r[] = {{e, Side::Right}};
    sq += std::pow(lrz_derivative(f, m, l), 2) + std::pow(lrz_derivative(f, m, r), 2);
  }
  for (int i = 0; i < n; ++i) {
    const InvariantStep st[] = {InvariantStep::base(SectionField::constant(n, Vec::Unit(d, i)))};
    sq += std::pow(invariant_derivative(f, m, st), 2);
  }
  return {value, std::sqrt(sq)};
}

}  // namespace

double contrast_residual(const ContrastFunction& f, const Vec& m) {
  const auto [value, dnorm] = contrast_value_and_differential(f, m);
  return std::max(std::abs(value), dnorm);
}

ContrastReport check_contrast(const ContrastFunction& f, int samples, double tol, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("check_contrast: samples must be >= 1");
  ContrastReport rep;
  rep.tolerance = tol;
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vec m = f.domain().sample(rng);
    const auto [value, dnorm] = contrast_value_and_differential(f, m);
    rep.max_value = std::max(rep.max_value, std::abs(value));
    rep.max_differential = std::max(rep.max_differential, dnorm);
    if (std::abs(value) > tol || dnorm > tol) rep.violations.push_back({m, value, dnorm});
  }
  std::stable_sort(rep.violations.begin(), rep.violations.end(), [](const auto& a, const auto& b) {
    return std::max(std::abs(a.value), a.differential_norm) > std::max(std::abs(b.value), b.differential_norm);
  });
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace contrastgeo
