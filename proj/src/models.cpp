#include "contrastgeo/models.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "contrastgeo/expr.hpp"
#include "contrastgeo/tensors.hpp"

namespace contrastgeo {

namespace {

using Complex = std::complex<double>;
using json = nlohmann::json;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

std::string param_string(const Params& p, const std::string& key, const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void require_known(const Params& p, std::initializer_list<const char*> keys, const std::string& model) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ModelError(model + ": unknown parameter '" + k + "'");
  }
}

Jet3 half_square_distance(std::span<const Jet3> a, std::span<const Jet3> b) {
  Jet3 s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Jet3 t = a[i] - b[i];
    s += t * t;
  }
  return 0.5 * s;
}

std::vector<std::string> numbered(const std::string& stem, int n) {
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back(stem + std::to_string(i));
  return v;
}

/// Chart that forgets the last `drop` coordinates; leaves are translates.
QuotientChart drop_last_chart(int d, int drop, Domain domain) {
  const int q = d - drop;
  QuotientChart c;
  c.name = "drop_last:" + std::to_string(drop);
  c.quotient_dim = q;
  c.projection = VectorFn(d, q, [q](std::span<const Jet3> x) { return JetVec(x.begin(), x.begin() + q); });
  c.section = VectorFn(q, d, [d](std::span<const Jet3> u) {
    JetVec x(u.begin(), u.end());
    x.resize(d, Jet3(0.0));
    return x;
  });
  c.leaf_action = VectorFn(d + drop, d, [d, q](std::span<const Jet3> xs) {
    JetVec x(xs.begin(), xs.begin() + d);
    for (int i = q; i < d; ++i) x[i] += xs[d + i - q];
    return x;
  });
  for (int j = 0; j < drop; ++j) c.generators.push_back(VectorFn::constant(d, Vec::Unit(d, q + j)));
  c.domain = std::move(domain);
  return c;
}

// ---------------------------------------------------------------------------

ModelDescriptor quad_euclid(const Params& p) {
  require_known(p, {"n"}, "quad_euclid");
  const int n = param_int(p, "n", 2);
  if (n < 1 || n > 16) throw ModelError("quad_euclid: n must be in 1..16");
  ModelDescriptor m;
  m.name = "quad_euclid";
  m.params = {{"n", std::to_string(n)}};
  m.contrast_source = "builtin:quad_euclid";
  SmoothFn fn(2 * n, [n](std::span<const Jet3> g) { return half_square_distance(g.subspan(0, n), g.subspan(n, n)); });
  m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(n), fn,
                                Domain::box(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0), false));
  m.coordinates = numbered("x", n);
  m.reference_metric = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  m.reference_gamma = [n](const Vec&) { return Tensor3(n); };
  m.reference_gamma_star = m.reference_gamma;
  return m;
}

ModelDescriptor singular_r3(const Params& p) {
  require_known(p, {}, "singular_r3");
  ModelDescriptor m;
  m.name = "singular_r3";
  m.contrast_source = "builtin:singular_r3";
  SmoothFn fn(6, [](std::span<const Jet3> g) {
    return half_square_distance(g.subspan(0, 2), g.subspan(3, 2));
  });
  m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(3), fn,
                                Domain::box(Vec::Constant(3, -1.0), Vec::Constant(3, 1.0), false));
  m.coordinates = {"x", "y", "z"};
  m.chart = drop_last_chart(3, 1, Domain::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), false));
  m.reference_metric = [](const Vec&) { return Mat(Vec3(1.0, 1.0, 0.0).asDiagonal()); };
  m.reference_gamma = [](const Vec&) { return Tensor3(3); };
  m.reference_gamma_star = m.reference_gamma;
  return m;
}

ModelDescriptor gaussian_kl(const Params& p) {
  require_known(p, {"chart"}, "gaussian_kl");
  const std::string chart = param_string(p, "chart", "mu_sigma");
  ModelDescriptor m;
  m.name = "gaussian_kl";
  m.params = {{"chart", chart}};
  m.contrast_source = "builtin:gaussian_kl";
  const double slo = 0.8, shi = 2.0;
  Domain dom;
  if (chart == "mu_sigma") {
    // KL(N(mu1, s1^2) || N(mu2, s2^2))
    m.contrast = ContrastFunction(
        std::make_shared<PairGroupoid>(2), SmoothFn(4, [](std::span<const Jet3> g) {
          const Jet3 dmu = g[0] - g[2];
          return log(g[3] / g[1]) + (g[1] * g[1] + dmu * dmu) / (2.0 * g[3] * g[3]) - 0.5;
        }));
    dom = Domain::box(Vec2(-1.0, slo), Vec2(1.0, shi));
    dom.contains = [](const Vec& x) { return x.size() == 2 && std::isfinite(x[0]) && x[1] > 0.0; };
    m.coordinates = {"mu", "sigma"};
    m.reference_metric = [](const Vec& x) { return Mat(Mat(Vec2(1.0, 2.0).asDiagonal()) / (x[1] * x[1])); };
  } else if (chart == "mu_logsigma") {
    m.contrast = ContrastFunction(
        std::make_shared<PairGroupoid>(2), SmoothFn(4, [](std::span<const Jet3> g) {
          const Jet3 dmu = g[0] - g[2];
          return (g[3] - g[1]) + (exp(2.0 * g[1]) + dmu * dmu) / (2.0 * exp(2.0 * g[3])) - 0.5;
        }));
    dom = Domain::box(Vec2(-1.0, std::log(slo)), Vec2(1.0, std::log(shi)));
    dom.contains = [](const Vec& x) { return x.size() == 2 && x.allFinite(); };
    m.coordinates = {"mu", "log_sigma"};
    m.reference_metric = [](const Vec& x) { return Mat(Vec2(std::exp(-2.0 * x[1]), 2.0).asDiagonal()); };
  } else {
    throw ModelError("gaussian_kl: chart must be mu_sigma or mu_logsigma");
  }
  m.contrast = ContrastFunction(m.contrast.backend_ptr(), m.contrast.fn(), dom);
  return m;
}

// Bregman generators: psi, grad psi and closed-form derivatives for references.
struct Potential {
  std::function<Jet3(std::span<const Jet3>)> psi;
  std::function<JetVec(std::span<const Jet3>)> grad;
  std::function<Mat(const Vec&)> hessian;
  std::function<Tensor3(const Vec&)> third;
  Domain domain;
};

Potential quadratic_potential(int d) {
  Mat a = Mat::Identity(d, d);
  for (int i = 0; i + 1 < d; ++i) a(i, i + 1) = a(i + 1, i) = 0.3;
  Potential p;
  p.psi = [a, d](std::span<const Jet3> t) {
    Jet3 s(0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (a(i, j) != 0.0) s += a(i, j) * t[i] * t[j];
    return 0.5 * s;
  };
  p.grad = [a, d](std::span<const Jet3> t) {
    JetVec g(d, Jet3(0.0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (a(i, j) != 0.0) g[i] += a(i, j) * t[j];
    return g;
  };
  p.hessian = [a](const Vec&) { return a; };
  p.third = [d](const Vec&) { return Tensor3(d); };
  p.domain = Domain::box(Vec::Constant(d, -1.0), Vec::Constant(d, 1.0), false);
  return p;
}

Potential lse_potential(int d) {
  // psi = log(1 + sum exp(theta)): cumulant function of a categorical family
  Potential p;
  auto denom = [d](std::span<const Jet3> t) {
    Jet3 s(1.0);
    for (int i = 0; i < d; ++i) s += exp(t[i]);
    return s;
  };
  p.psi = [denom](std::span<const Jet3> t) { return log(denom(t)); };
  p.grad = [denom, d](std::span<const Jet3> t) {
    const Jet3 z = denom(t);
    JetVec g(d);
    for (int i = 0; i < d; ++i) g[i] = exp(t[i]) / z;
    return g;
  };
  auto probs = [d](const Vec& t) {
    Vec e = t.array().exp();
    return Vec(e / (1.0 + e.sum()));
  };
  p.hessian = [probs](const Vec& t) {
    const Vec q = probs(t);
    return Mat(Mat(q.asDiagonal()) - q * q.transpose());
  };
  p.third = [probs, d](const Vec& t) {
    const Vec q = probs(t);
    auto dq = [&](int i, int k) { return (i == k ? q[i] : 0.0) - q[i] * q[k]; };
    Tensor3 r(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) r(i, j, k) = (i == j ? dq(i, k) : 0.0) - dq(i, k) * q[j] - q[i] * dq(j, k);
    return r;
  };
  p.domain = Domain::box(Vec::Constant(d, -1.0), Vec::Constant(d, 1.0), false);
  return p;
}

Potential negentropy_potential(int d) {
  // psi = sum t_i log t_i + (1 - sum t) log(1 - sum t) on the open simplex
  Potential p;
  auto rest = [d](std::span<const Jet3> t) {
    Jet3 s(1.0);
    for (int i = 0; i < d; ++i) s -= t[i];
    return s;
  };
  p.psi = [rest, d](std::span<const Jet3> t) {
    Jet3 s = rest(t) * log(rest(t));
    for (int i = 0; i < d; ++i) s += t[i] * log(t[i]);
    return s;
  };
  p.grad = [rest, d](std::span<const Jet3> t) {
    const Jet3 lr = log(rest(t));
    JetVec g(d);
    for (int i = 0; i < d; ++i) g[i] = log(t[i]) - lr;
    return g;
  };
  p.hessian = [d](const Vec& t) {
    const double r = 1.0 - t.sum();
    Mat h = Mat::Constant(d, d, 1.0 / r);
    for (int i = 0; i < d; ++i) h(i, i) += 1.0 / t[i];
    return h;
  };
  p.third = [d](const Vec& t) {
    const double r = 1.0 - t.sum();
    Tensor3 h(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) h(i, j, k) = 1.0 / (r * r) - (i == j && j == k ? 1.0 / (t[i] * t[i]) : 0.0);
    return h;
  };
  p.domain = Domain::box(Vec::Constant(d, 0.15), Vec::Constant(d, 0.3));
  p.domain.contains = [d](const Vec& t) {
    return t.size() == d && (t.array() > 0.0).all() && t.sum() < 1.0;
  };
  return p;
}

ModelDescriptor bregman(const Params& params) {
  require_known(params, {"psi", "d"}, "bregman");
  const std::string psi = param_string(params, "psi", "lse");
  const int d = param_int(params, "d", 3);
  if (d < 1 || d > 16) throw ModelError("bregman: d must be in 1..16");
  Potential pot;
  if (psi == "quadratic") {
    pot = quadratic_potential(d);
  } else if (psi == "lse") {
    pot = lse_potential(d);
  } else if (psi == "negentropy") {
    if (d > 5) throw ModelError("bregman: negentropy chart needs d <= 5");
    pot = negentropy_potential(d);
  } else {
    throw ModelError("bregman: psi must be quadratic, lse or negentropy");
  }
  ModelDescriptor m;
  m.name = "bregman";
  m.params = {{"psi", psi}, {"d", std::to_string(d)}};
  m.contrast_source = "builtin:bregman";
  SmoothFn fn(2 * d, [pot, d](std::span<const Jet3> g) {
    const auto z = g.subspan(0, d), x = g.subspan(d, d);
    Jet3 s = pot.psi(z) - pot.psi(x);
    const JetVec gr = pot.grad(x);
    for (int i = 0; i < d; ++i) s -= gr[i] * (z[i] - x[i]);
    return s;
  });
  m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(d), fn, pot.domain);
  m.coordinates = numbered("theta", d);
  m.reference_metric = pot.hessian;
  m.reference_gamma = pot.third;
  m.reference_gamma_star = [d](const Vec&) { return Tensor3(d); };
  return m;
}

// Fubini-Study: realified C^n with (Re, Im) interleaved.

Jet3 fs_contrast(std::span<const Jet3> phi, std::span<const Jet3> psi) {
  const std::size_t n2 = phi.size();
  Jet3 re(0.0), im(0.0), np(0.0), nq(0.0);
  for (std::size_t k = 0; k < n2; k += 2) {
    const Jet3 &a = phi[k], &b = phi[k + 1], &c = psi[k], &d = psi[k + 1];
    re += a * c + b * d;
    im += a * d - b * c;
    np += a * a + b * b;
    nq += c * c + d * d;
  }
  return 1.0 - (re * re + im * im) / (np * nq);
}

Eigen::VectorXcd complexify(const Vec& x) {
  Eigen::VectorXcd z(x.size() / 2);
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = Complex(x[2 * k], x[2 * k + 1]);
  return z;
}

Mat fubini_reference(const Vec& x) {
  const Eigen::VectorXcd phi = complexify(x);
  const int d = static_cast<int>(x.size());
  const double n2 = phi.squaredNorm();
  std::vector<Eigen::VectorXcd> e;
  for (int a = 0; a < d; ++a) e.push_back(complexify(Vec::Unit(d, a)));
  Mat g(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const Complex xy = e[a].dot(e[b]);  // <x|y>
      const Complex xphi = e[a].dot(phi);
      const Complex phiy = phi.dot(e[b]);
      g(a, b) = (2.0 * xy.real() * n2 - 2.0 * (xphi * phiy).real()) / (n2 * n2);
    }
  }
  return g;
}

/// Quotient chart: unit representative whose component `pin` is real-positive.
QuotientChart fubini_chart(int n, int gauge) {
  const int d = 2 * n, q = 2 * n - 2;
  const int pin = gauge == 1 ? 0 : n - 1;
  QuotientChart c;
  c.name = "fubini_study:gauge" + std::to_string(gauge);
  c.quotient_dim = q;
  c.section = VectorFn(q, d, [n, pin](std::span<const Jet3> w) {
    Jet3 r(1.0);
    for (const auto& v : w) r -= v * v;
    JetVec x;
    std::size_t k = 0;
    for (int j = 0; j < n; ++j) {
      if (j == pin) {
        x.push_back(sqrt(r));
        x.emplace_back(0.0);
      } else {
        x.push_back(w[k++]);
        x.push_back(w[k++]);
      }
    }
    return x;
  });
  c.projection = VectorFn(d, q, [n, pin](std::span<const Jet3> x) {
    Jet3 norm2(0.0);
    for (const auto& v : x) norm2 += v * v;
    const Jet3 a = x[2 * pin], b = x[2 * pin + 1];
    const Jet3 scale = sqrt(a * a + b * b) * sqrt(norm2);
    JetVec w;
    for (int j = 0; j < n; ++j) {
      if (j == pin) continue;
      const Jet3 &re = x[2 * j], &im = x[2 * j + 1];
      // conj(x_pin) x_j / (|x_pin| |x|)
      w.push_back((a * re + b * im) / scale);
      w.push_back((a * im - b * re) / scale);
    }
    return w;
  });
  c.leaf_action = VectorFn(d + 2, d, [d](std::span<const Jet3> xs) {
    const Jet3 r = exp(xs[d]), cs = cos(xs[d + 1]), sn = sin(xs[d + 1]);
    JetVec y(d);
    for (int k = 0; k < d; k += 2) {
      y[k] = r * (xs[k] * cs - xs[k + 1] * sn);
      y[k + 1] = r * (xs[k] * sn + xs[k + 1] * cs);
    }
    return y;
  });
  c.generators.push_back(VectorFn(d, d, [](std::span<const Jet3> x) { return JetVec(x.begin(), x.end()); }));
  c.generators.push_back(VectorFn(d, d, [d](std::span<const Jet3> x) {
    JetVec y(d);
    for (int k = 0; k < d; k += 2) {
      y[k] = -x[k + 1];
      y[k + 1] = x[k];
    }
    return y;
  }));
  // round metric of the projective space in this chart:
  //   Re<a|b> + Re<w|a> Re<w|b> / (1 - |w|^2) - Im<w|a> Im<w|b>
  c.reference_metric = [q](const Vec& wr) {
    const Eigen::VectorXcd w = complexify(wr);
    const double r2 = 1.0 - w.squaredNorm();
    Mat g(q, q);
    for (int a = 0; a < q; ++a) {
      const Eigen::VectorXcd ea = complexify(Vec::Unit(q, a));
      for (int b = 0; b < q; ++b) {
        const Eigen::VectorXcd eb = complexify(Vec::Unit(q, b));
        const Complex wa = w.dot(ea), wb = w.dot(eb);
        g(a, b) = ea.dot(eb).real() + wa.real() * wb.real() / r2 - wa.imag() * wb.imag();
      }
    }
    return g;
  };
  const double lim = 0.6 / std::sqrt(static_cast<double>(std::max(1, q)));
  c.domain = Domain::box(Vec::Constant(q, -lim), Vec::Constant(q, lim));
  c.domain.contains = [q](const Vec& w) { return w.size() == q && w.squaredNorm() < 1.0; };
  return c;
}

ModelDescriptor fubini_study(const Params& p) {
  require_known(p, {"n", "gauge"}, "fubini_study");
  const int n = param_int(p, "n", 2);
  const int gauge = param_int(p, "gauge", 1);
  if (n < 2 || n > 8) throw ModelError("fubini_study: n must be in 2..8");
  if (gauge != 1 && gauge != 2) throw ModelError("fubini_study: gauge must be 1 or 2");
  const int d = 2 * n;
  ModelDescriptor m;
  m.name = "fubini_study";
  m.params = {{"n", std::to_string(n)}, {"gauge", std::to_string(gauge)}};
  m.contrast_source = "builtin:fubini_study";
  SmoothFn fn(2 * d, [d](std::span<const Jet3> g) { return fs_contrast(g.subspan(0, d), g.subspan(d, d)); });
  Domain dom;
  dom.sample = [d](Rng& rng) {
    // direction uniform on a box shell, norm in [0.8, 1.2]
    for (;;) {
      Vec v = rng.uniform_vector(d, -1.0, 1.0);
      const double nv = v.norm();
      if (nv < 0.3) continue;
      return Vec(v * (rng.uniform(0.8, 1.2) / nv));
    }
  };
  dom.contains = [d](const Vec& x) { return x.size() == d && x.norm() > 1e-3; };
  m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(d), fn, dom);
  for (int k = 1; k <= n; ++k) {
    m.coordinates.push_back("re" + std::to_string(k));
    m.coordinates.push_back("im" + std::to_string(k));
  }
  m.chart = fubini_chart(n, gauge);
  m.reference_metric = fubini_reference;
  return m;
}

ModelDescriptor weighted_singular(const Params& p) {
  require_known(p, {}, "weighted_singular");
  ModelDescriptor m;
  m.name = "weighted_singular";
  m.contrast_source = "builtin:weighted_singular";
  // coordinates (x, z); F = 1/2 exp(z1 + z2) (x1 - x2)^2
  SmoothFn fn(4, [](std::span<const Jet3> g) {
    const Jet3 dx = g[0] - g[2];
    return 0.5 * exp(g[1] + g[3]) * dx * dx;
  });
  Domain dom = Domain::box(Vec2(-1.0, -0.3), Vec2(1.0, 0.3), false);
  m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(2), fn, dom);
  m.coordinates = {"x", "z"};
  m.chart = drop_last_chart(2, 1, Domain::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), false));
  m.reference_metric = [](const Vec& x) { return Mat(Vec2(std::exp(2.0 * x[1]), 0.0).asDiagonal()); };
  return m;
}

ModelDescriptor unitary_group(const Params& p) {
  require_known(p, {"k", "group"}, "unitary_group");
  const int k = param_int(p, "k", 2);
  const std::string group = param_string(p, "group", "u");
  if (k < 1 || k > 4) throw ModelError("unitary_group: k must be in 1..4");
  std::shared_ptr<MatrixLieGroup> g;
  if (group == "u") {
    g = std::make_shared<MatrixLieGroup>(MatrixLieGroup::unitary(k));
  } else if (group == "su") {
    if (k < 2) throw ModelError("unitary_group: su needs k >= 2");
    const Complex i(0.0, 1.0);
    std::vector<CMat> basis;
    for (int j = 0; j + 1 < k; ++j) {
      CMat h = CMat::Zero(k, k);
      h(j, j) = i;
      h(j + 1, j + 1) = -i;
      basis.push_back(h);
    }
    const MatrixLieGroup u = MatrixLieGroup::unitary(k);
    for (const CMat& b : u.basis())
      if (b.diagonal().isZero()) basis.push_back(b);
    g = std::make_shared<MatrixLieGroup>(std::move(basis), "SU(" + std::to_string(k) + ")");
  } else {
    throw ModelError("unitary_group: group must be u or su");
  }
  ModelDescriptor m;
  m.name = "unitary_group";
  m.params = {{"k", std::to_string(k)}, {"group", group}};
  m.contrast_source = "builtin:unitary_group";
  SmoothFn fn(2 * k * k, [k](std::span<const Jet3> x) {
    Jet3 tr(0.0);
    for (int j = 0; j < k; ++j) tr += x[2 * (j * k + j)];
    return 1.0 - tr / static_cast<double>(k);
  });
  Domain dom;
  dom.sample = [](Rng&) { return Vec(0); };
  dom.contains = [](const Vec& x) { return x.size() == 0; };
  m.contrast = ContrastFunction(g, fn, dom);
  const auto basis = g->basis();
  m.reference_metric = [basis, k](const Vec&) {
    const int d = static_cast<int>(basis.size());
    Mat r(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) r(a, b) = -(basis[a] * basis[b]).trace().real() / k;
    return r;
  };
  return m;
}

using Builder = ModelDescriptor (*)(const Params&);

const std::vector<std::pair<std::string, Builder>>& registry() {
  static const std::vector<std::pair<std::string, Builder>> r = {
      {"quad_euclid", quad_euclid},   {"singular_r3", singular_r3},
      {"gaussian_kl", gaussian_kl},   {"bregman", bregman},
      {"fubini_study", fubini_study}, {"weighted_singular", weighted_singular},
      {"unitary_group", unitary_group},
  };
  return r;
}

Vec json_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ModelError(std::string("descriptor: ") + what + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ModelError(std::string("descriptor: ") + what + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

const std::vector<std::string>& zoo_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, b] : registry()) v.push_back(n);
    return v;
  }();
  return names;
}

ModelDescriptor build(const std::string& name, const Params& params) {
  for (const auto& [n, b] : registry()) {
    if (n != name) continue;
    ModelDescriptor m = b(params);
    for (const auto& [k, v] : params) m.params.emplace(k, v);
    return m;
  }
  throw ModelError("unknown model '" + name + "'");
}

ModelDescriptor parse_descriptor(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("descriptor: ") + e.what());
  }
  if (!doc.is_object()) throw ModelError("descriptor: top level must be an object");
  if (!doc.contains("contrast") || !doc["contrast"].is_string())
    throw ModelError("descriptor: missing string field 'contrast'");
  const std::string contrast = doc["contrast"].get<std::string>();

  Params params;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ModelError("descriptor: 'params' must be an object");
    for (const auto& [k, v] : doc["params"].items())
      params[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }

  ModelDescriptor m;
  const std::string prefix = "builtin:";
  if (contrast.rfind(prefix, 0) == 0) {
    m = build(contrast.substr(prefix.size()), params);
  } else {
    if (!doc.contains("dim") || !doc["dim"].is_number_integer())
      throw ModelError("descriptor: expression contrasts need an integer 'dim'");
    const int dim = doc["dim"].get<int>();
    if (dim < 1 || dim > 16) throw ModelError("descriptor: dim must be in 1..16");
    if (!params.empty()) throw ModelError("descriptor: params are only meaningful for builtin contrasts");
    const expr::Ast ast = expr::parse(contrast, dim);
    Domain dom = Domain::box(Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0), false);
    if (doc.contains("domain")) {
      const json& d = doc["domain"];
      if (!d.is_object() || !d.contains("lo") || !d.contains("hi"))
        throw ModelError("descriptor: domain needs 'lo' and 'hi'");
      const Vec lo = json_vector(d["lo"], "domain.lo"), hi = json_vector(d["hi"], "domain.hi");
      if (lo.size() != dim || hi.size() != dim || !(lo.array() < hi.array()).all())
        throw ModelError("descriptor: domain bounds must have length dim with lo < hi");
      dom = Domain::box(lo, hi, false);
    }
    m.contrast = ContrastFunction(std::make_shared<PairGroupoid>(dim), expr::to_smooth_fn(ast), dom);
    m.contrast_source = contrast;
    m.coordinates = numbered("x", dim);
    m.name = "expression";
  }
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ModelError("descriptor: 'name' must be a string");
    m.name = doc["name"].get<std::string>();
  }
  if (doc.contains("dim") && doc["dim"].is_number_integer() && doc["dim"].get<int>() != m.contrast.backend().base_dim())
    throw ModelError("descriptor: 'dim' does not match the contrast");
  if (doc.contains("quotient_chart")) {
    if (!doc["quotient_chart"].is_string()) throw ModelError("descriptor: 'quotient_chart' must be a string");
    const std::string id = doc["quotient_chart"].get<std::string>();
    const int d = m.contrast.backend().base_dim();
    if (id.rfind("drop_last:", 0) == 0) {
      int drop = 0;
      try {
        drop = std::stoi(id.substr(10));
      } catch (const std::exception&) {
        throw ModelError("descriptor: bad quotient chart id '" + id + "'");
      }
      if (drop < 1 || drop >= d) throw ModelError("descriptor: drop_last count out of range");
      m.chart = drop_last_chart(d, drop, Domain::box(Vec::Constant(d - drop, -1.0), Vec::Constant(d - drop, 1.0), false));
    } else if (id != "builtin") {
      throw ModelError("descriptor: unknown quotient chart id '" + id + "'");
    }
  }
  return m;
}

ModelDescriptor load_descriptor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_descriptor(ss.str());
}

ReferenceReport reference_check(const ModelDescriptor& model, int samples, double tol, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("reference_check: samples must be >= 1");
  ReferenceReport r;
  r.samples = samples;
  r.tolerance = tol;
  r.has_metric = static_cast<bool>(model.reference_metric);
  r.has_gamma = static_cast<bool>(model.reference_gamma);
  const ContrastFunction& f = model.contrast;
  for (int s = 0; s < samples; ++s) {
    const Vec m = f.domain().sample(rng);
    if (r.has_metric)
      r.metric_deviation =
          std::max(r.metric_deviation, (metric(f, m) - model.reference_metric(m)).cwiseAbs().maxCoeff());
    if (r.has_gamma)
      r.gamma_deviation = std::max(r.gamma_deviation, max_abs_diff(christoffel_lowered(f, m), model.reference_gamma(m)));
    if (model.reference_gamma_star)
      r.gamma_star_deviation = std::max(
          r.gamma_star_deviation, max_abs_diff(christoffel_lowered(dual_contrast(f), m), model.reference_gamma_star(m)));
  }
  r.passed = r.metric_deviation <= tol && r.gamma_deviation <= tol && r.gamma_star_deviation <= tol;
  return r;
}

Params parse_params(const std::vector<std::string>& items) {
  Params p;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("parameter '" + kv + "' is not key=value");
      p[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  return p;
}

double param_double(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size()) throw ModelError("parameter '" + key + "' is not a number: " + it->second);
  return v;
}

int param_int(const Params& p, const std::string& key, int fallback) {
  const double v = param_double(p, key, fallback);
  if (v != std::floor(v) || std::abs(v) > 1e6) throw ModelError("parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}

}  // namespace contrastgeo
