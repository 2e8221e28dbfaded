#include "contrastgeo/jet.hpp"

#include <cmath>
#include <sstream>

namespace contrastgeo {

namespace {

Jet3 checked(const Jet3& j, const char* primitive) {
  for (double c : j.coeffs()) {
    if (!std::isfinite(c)) throw EvaluationError(primitive, "non-finite intermediate value");
  }
  return j;
}

void require_arity(int expected, std::size_t got, const char* what) {
  if (static_cast<std::size_t>(expected) != got) {
    std::ostringstream os;
    os << what << ": expected " << expected << " inputs, got " << got;
    throw std::invalid_argument(os.str());
  }
}

// a0^k guarded so that a zero multiplier never meets an infinite power.
double scaled_power(double factor, double base, int k) {
  if (factor == 0.0) return 0.0;
  return factor * std::pow(base, k);
}

}  // namespace

Jet3& Jet3::operator+=(const Jet3& o) {
  for (int s = 0; s < kTerms; ++s) c_[s] += o.c_[s];
  return *this = checked(*this, "add");
}

Jet3& Jet3::operator-=(const Jet3& o) {
  for (int s = 0; s < kTerms; ++s) c_[s] -= o.c_[s];
  return *this = checked(*this, "sub");
}

Jet3& Jet3::operator*=(const Jet3& o) {
  std::array<double, kTerms> r{};
  for (unsigned s = 0; s < kTerms; ++s) {
    double acc = 0.0;
    // every split of the seed set s into disjoint (a, s \ a)
    for (unsigned a = s;; a = (a - 1) & s) {
      acc += c_[a] * o.c_[s ^ a];
      if (a == 0) break;
    }
    r[s] = acc;
  }
  c_ = r;
  return *this = checked(*this, "mul");
}

Jet3& Jet3::operator/=(const Jet3& o) {
  const double b0 = o.value();
  if (b0 == 0.0) throw EvaluationError("div", "division by zero");
  const double inv = 1.0 / b0;
  Jet3 recip = compose_scalar(o, {inv, -inv * inv, 2.0 * inv * inv * inv, -6.0 * inv * inv * inv * inv},
                              "div");
  const double quotient = c_[0] / b0;
  *this *= recip;
  c_[0] = quotient;  // keep the value bit-identical to plain division
  return *this;
}

Jet3 operator-(const Jet3& a) {
  Jet3 r;
  for (unsigned s = 0; s < Jet3::kTerms; ++s) r[s] = -a[s];
  return r;
}
Jet3 operator+(const Jet3& a, const Jet3& b) { return Jet3(a) += b; }
Jet3 operator-(const Jet3& a, const Jet3& b) { return Jet3(a) -= b; }
Jet3 operator*(const Jet3& a, const Jet3& b) { return Jet3(a) *= b; }
Jet3 operator/(const Jet3& a, const Jet3& b) { return Jet3(a) /= b; }

Jet3 compose_scalar(const Jet3& a, const std::array<double, 4>& derivs, const char* primitive) {
  for (double d : derivs) {
    if (!std::isfinite(d)) throw EvaluationError(primitive, "non-finite intermediate value");
  }
  Jet3 d = a;
  d[0] = 0.0;
  Jet3 r(derivs[0]);
  if (d.is_constant()) return r;
  Jet3 d2 = d * d;
  Jet3 d3 = d2 * d;
  for (unsigned s = 1; s < Jet3::kTerms; ++s) {
    r[s] = derivs[1] * d[s] + 0.5 * derivs[2] * d2[s] + derivs[3] / 6.0 * d3[s];
  }
  return checked(r, primitive);
}

Jet3 exp(const Jet3& a) {
  const double e = std::exp(a.value());
  return compose_scalar(a, {e, e, e, e}, "exp");
}

Jet3 log(const Jet3& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw EvaluationError("log", "argument must be positive");
  const double i = 1.0 / x;
  return compose_scalar(a, {std::log(x), i, -i * i, 2.0 * i * i * i}, "log");
}

Jet3 sin(const Jet3& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return compose_scalar(a, {s, c, -s, -c}, "sin");
}

Jet3 cos(const Jet3& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  return compose_scalar(a, {c, -s, -c, s}, "cos");
}

Jet3 sqrt(const Jet3& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw EvaluationError("sqrt", "argument must be positive");
  const double r = std::sqrt(x);
  return compose_scalar(a, {r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)}, "sqrt");
}

Jet3 pow(const Jet3& a, int n) {
  const double x = a.value();
  if (n < 0 && x == 0.0) throw EvaluationError("pow", "zero base with negative exponent");
  if (n == 0) return Jet3(1.0);
  const double nn = n;
  return compose_scalar(a,
                        {std::pow(x, n), scaled_power(nn, x, n - 1), scaled_power(nn * (nn - 1), x, n - 2),
                         scaled_power(nn * (nn - 1) * (nn - 2), x, n - 3)},
                        "pow");
}

SmoothFn::SmoothFn(int arity, Evaluator eval) : arity_(arity), eval_(std::move(eval)) {
  if (arity < 0) throw std::invalid_argument("SmoothFn: negative arity");
}

Jet3 SmoothFn::operator()(std::span<const Jet3> x) const {
  require_arity(arity_, x.size(), "SmoothFn");
  return checked(eval_(x), "result");
}

double SmoothFn::operator()(const Vec& x) const {
  JetVec j = to_jets(x);
  return (*this)(std::span<const Jet3>(j)).value();
}

VectorFn::VectorFn(int arity, int outputs, Evaluator eval)
    : arity_(arity), outputs_(outputs), eval_(std::move(eval)) {}

JetVec VectorFn::operator()(std::span<const Jet3> x) const {
  require_arity(arity_, x.size(), "VectorFn");
  JetVec out = eval_(x);
  require_arity(outputs_, out.size(), "VectorFn output");
  return out;
}

Vec VectorFn::operator()(const Vec& x) const {
  JetVec j = to_jets(x);
  JetVec out = (*this)(std::span<const Jet3>(j));
  Vec r(outputs_);
  for (int i = 0; i < outputs_; ++i) r[i] = out[i].value();
  return r;
}

VectorFn VectorFn::constant(int arity, const Vec& value) {
  return VectorFn(arity, static_cast<int>(value.size()), [value](std::span<const Jet3>) {
    JetVec out(value.size());
    for (Eigen::Index i = 0; i < value.size(); ++i) out[i] = Jet3(value[i]);
    return out;
  });
}

VectorFn VectorFn::identity(int n) {
  return VectorFn(n, n, [](std::span<const Jet3> x) { return JetVec(x.begin(), x.end()); });
}

VectorFn VectorFn::linear(const Mat& a) {
  return VectorFn(static_cast<int>(a.cols()), static_cast<int>(a.rows()), [a](std::span<const Jet3> x) {
    JetVec out(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      Jet3 acc;
      for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
      out[i] = acc;
    }
    return out;
  });
}

JetVec to_jets(const Vec& p) {
  JetVec j(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) j[i] = Jet3(p[i]);
  return j;
}

JetVec seed_point(const Vec& p, std::span<const Vec> dirs) {
  if (dirs.size() > static_cast<std::size_t>(Jet3::kSeeds))
    throw std::invalid_argument("seed_point: at most three directions");
  JetVec j = to_jets(p);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    if (dirs[k].size() != p.size()) throw std::invalid_argument("seed_point: direction dimension mismatch");
    for (Eigen::Index i = 0; i < p.size(); ++i) j[i][1u << k] = dirs[k][i];
  }
  return j;
}

namespace {

double mixed(const SmoothFn& f, const Vec& p, std::span<const Vec> dirs) {
  require_arity(f.arity(), p.size(), "derivative point");
  JetVec x = seed_point(p, dirs);
  Jet3 r = f(std::span<const Jet3>(x));
  return r[(1u << dirs.size()) - 1];
}

}  // namespace

double deriv1(const SmoothFn& f, const Vec& p, const Vec& v) {
  const Vec d[] = {v};
  return mixed(f, p, d);
}

double deriv2(const SmoothFn& f, const Vec& p, const Vec& v, const Vec& w) {
  const Vec d[] = {v, w};
  return mixed(f, p, d);
}

double deriv3(const SmoothFn& f, const Vec& p, const Vec& u, const Vec& v, const Vec& w) {
  const Vec d[] = {u, v, w};
  return mixed(f, p, d);
}

Vec gradient(const SmoothFn& f, const Vec& p) {
  const int n = f.arity();
  Vec g(n);
  for (int i = 0; i < n; ++i) g[i] = deriv1(f, p, Vec::Unit(n, i));
  return g;
}

Mat hessian(const SmoothFn& f, const Vec& p) {
  const int n = f.arity();
  Mat h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      h(i, j) = h(j, i) = deriv2(f, p, Vec::Unit(n, i), Vec::Unit(n, j));
    }
  }
  return h;
}

Mat jacobian(const VectorFn& f, const Vec& p) {
  require_arity(f.arity(), p.size(), "jacobian point");
  Mat jac(f.outputs(), f.arity());
  for (int j = 0; j < f.arity(); ++j) {
    const Vec d[] = {Vec::Unit(f.arity(), j)};
    JetVec x = seed_point(p, d);
    JetVec y = f(std::span<const Jet3>(x));
    for (int i = 0; i < f.outputs(); ++i) jac(i, j) = y[i][1];
  }
  return jac;
}

}  // namespace contrastgeo
