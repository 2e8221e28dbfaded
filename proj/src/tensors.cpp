#include "contrastgeo/tensors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace contrastgeo {

namespace {

SectionField frame_section(const GroupoidBackend& b, int a) {
  return SectionField::constant(b.base_dim(), Vec::Unit(b.rank(), a));
}

std::vector<SectionField> frame(const GroupoidBackend& b) {
  std::vector<SectionField> e;
  for (int a = 0; a < b.rank(); ++a) e.push_back(frame_section(b, a));
  return e;
}

double pair_form(const Mat& g, const Vec& x, const Vec& y) { return x.dot(g * y); }

/// Coordinate function x_j times e_k on a pair groupoid chart.
SectionField coordinate_scaled(int n, int j, int k) {
  return SectionField(VectorFn(n, n, [n, j, k](std::span<const Jet3> m) {
    JetVec v(n, Jet3(0.0));
    v[k] = m[j];
    return v;
  }));
}

}  // namespace

double metric_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y) {
  const InvariantStep steps[] = {InvariantStep::left(x), InvariantStep::left(y)};
  return invariant_derivative(f, m, steps);
}

double metric_derivative(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                         const SectionField& z) {
  if (f.backend().base_dim() == 0) return 0.0;
  const InvariantStep steps[] = {InvariantStep::base(x), InvariantStep::left(y), InvariantStep::left(z)};
  return invariant_derivative(f, m, steps);
}

double connection_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                        const SectionField& z) {
  const InvariantStep steps[] = {InvariantStep::left(x), InvariantStep::left(y), InvariantStep::right(z)};
  return invariant_derivative(f, m, steps);
}

double koszul_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                    const SectionField& z) {
  const GroupoidBackend& b = f.backend();
  const Mat g = metric(f, m);
  const Vec xm = x.at(m), ym = y.at(m), zm = z.at(m);
  const double anchor_terms =
      metric_derivative(f, m, x, y, z) + metric_derivative(f, m, y, z, x) - metric_derivative(f, m, z, x, y);
  const double bracket_terms = pair_form(g, b.bracket(x, y, m), zm) - pair_form(g, b.bracket(y, z, m), xm) -
                               pair_form(g, b.bracket(x, z, m), ym);
  return 0.5 * (anchor_terms + bracket_terms);
}

Mat metric(const ContrastFunction& f, const Vec& m) {
  const int d = f.rank();
  Mat g(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k) {
      const Direction p[] = {{Vec::Unit(d, j), Side::Left}, {Vec::Unit(d, k), Side::Left}};
      g(j, k) = lrz_derivative(f, m, p);
      g(k, j) = g(j, k);
    }
  }
  if (!g.allFinite()) throw EvaluationError("metric", "non-finite entry");
  return g;
}

Tensor3 christoffel_lowered(const ContrastFunction& f, const Vec& m) {
  const int d = f.rank();
  Tensor3 t(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int l = 0; l < d; ++l) {
        const Direction p[] = {
            {Vec::Unit(d, i), Side::Left}, {Vec::Unit(d, j), Side::Left}, {Vec::Unit(d, l), Side::Right}};
        t(i, j, l) = lrz_derivative(f, m, p);
      }
    }
  }
  return t;
}

Tensor3 skewness(const ContrastFunction& f, const Vec& m) {
  return christoffel_lowered(f, m) - christoffel_lowered(dual_contrast(f), m);
}

Tensor3 metric_gradient(const ContrastFunction& f, const Vec& m) {
  const GroupoidBackend& b = f.backend();
  const int d = b.rank();
  Tensor3 dg(d);
  if (b.base_dim() == 0) return dg;
  const auto e = frame(b);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int l = j; l < d; ++l) {
        dg(i, j, l) = metric_derivative(f, m, e[i], e[j], e[l]);
        dg(i, l, j) = dg(i, j, l);
      }
    }
  }
  return dg;
}

Tensor3 structure_constants(const GroupoidBackend& backend, const Vec& m) {
  const int d = backend.rank();
  Tensor3 c(d);
  const auto e = frame(backend);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const Vec br = backend.bracket(e[i], e[j], m);
      for (int k = 0; k < d; ++k) {
        c(i, j, k) = br[k];
        c(j, i, k) = -br[k];
      }
    }
  }
  return c;
}

Tensor3 levi_civita_lowered(const ContrastFunction& f, const Vec& m) {
  const int d = f.rank();
  const Mat g = metric(f, m);
  const Tensor3 dg = metric_gradient(f, m);
  const Tensor3 c = structure_constants(f.backend(), m);
  auto cg = [&](int i, int j, int l) {  // g([e_i, e_j], e_l)
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += c(i, j, k) * g(k, l);
    return s;
  };
  Tensor3 lc(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l)
        lc(i, j, l) = 0.5 * (dg(i, j, l) + dg(j, l, i) - dg(l, i, j) + cg(i, j, l) - cg(j, l, i) - cg(i, l, j));
  return lc;
}

Tensor3 alpha_connection(const ContrastFunction& f, const Vec& m, double alpha) {
  return levi_civita_lowered(f, m) + (0.5 * alpha) * skewness(f, m);
}

double duality_residual(const Tensor3& gamma, const Tensor3& gamma_star, const Tensor3& dg) {
  const int d = gamma.dim();
  double r = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) r = std::max(r, std::abs(gamma(i, j, l) + gamma_star(i, l, j) - dg(i, j, l)));
  return r;
}

double duality_residual(const ContrastFunction& f, const Vec& m) {
  return duality_residual(christoffel_lowered(f, m), christoffel_lowered(dual_contrast(f), m),
                          metric_gradient(f, m));
}

std::vector<SectionField> torsion_test_sections(const GroupoidBackend& backend) {
  std::vector<SectionField> s = frame(backend);
  const int n = backend.base_dim();
  if (n == 0) return s;
  for (int k = 0; k < n; ++k) {
    s.push_back(coordinate_scaled(n, k, k));
    if (n > 1) s.push_back(coordinate_scaled(n, (k + 1) % n, k));
  }
  return s;
}

double torsion_residual(const ContrastFunction& f, const Vec& m, const std::vector<SectionField>& sections) {
  const GroupoidBackend& b = f.backend();
  const Mat g = metric(f, m);
  const auto e = frame(b);
  const ContrastFunction fs = dual_contrast(f);
  double r = 0.0;
  for (std::size_t p = 0; p < sections.size(); ++p) {
    for (std::size_t q = p + 1; q < sections.size(); ++q) {
      const SectionField& x = sections[p];
      const SectionField& y = sections[q];
      const Vec gb = g * b.bracket(x, y, m);
      for (int l = 0; l < b.rank(); ++l) {
        for (const ContrastFunction* c : {&f, &fs}) {
          const double t = connection_value(*c, m, x, y, e[l]) - connection_value(*c, m, y, x, e[l]) - gb[l];
          r = std::max(r, std::abs(t));
        }
      }
    }
  }
  return r;
}

double torsion_residual(const ContrastFunction& f, const Vec& m) {
  return torsion_residual(f, m, torsion_test_sections(f.backend()));
}

ConnectionField connection_field(const ContrastFunction& f, ConnectionKind kind) {
  ConnectionField cf;
  cf.dim = f.rank();
  cf.coordinate_frame = f.backend().base_dim() > 0;
  cf.structure = cf.coordinate_frame ? Tensor3(cf.dim) : structure_constants(f.backend(), Vec(0));
  cf.metric = [f](const Vec& m) { return metric(f, m); };
  switch (kind) {
    case ConnectionKind::Primal:
      cf.lowered = [f](const Vec& m) { return christoffel_lowered(f, m); };
      break;
    case ConnectionKind::Dual: {
      const ContrastFunction fs = dual_contrast(f);
      cf.lowered = [fs](const Vec& m) { return christoffel_lowered(fs, m); };
      break;
    }
    case ConnectionKind::LeviCivita:
      cf.lowered = [f](const Vec& m) { return levi_civita_lowered(f, m); };
      break;
  }
  return cf;
}

namespace {

/// Gamma^l_{ij} stored as (i, j, l).
Tensor3 raised(const ConnectionField& field, const Vec& m) {
  const Mat g = field.metric(m);
  const SpectralSplit s = spectral_split(g);
  if (s.kernel_dim > 0) throw std::domain_error("curvature: metric is singular here; reduce to the quotient first");
  const Mat ginv = g.inverse();
  const Tensor3 low = field.lowered(m);
  const int d = field.dim;
  Tensor3 up(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) {
        double s2 = 0.0;
        for (int k = 0; k < d; ++k) s2 += ginv(l, k) * low(i, j, k);
        up(i, j, l) = s2;
      }
  return up;
}

}  // namespace

Tensor4 curvature(const ConnectionField& field, const Vec& m, double h) {
  const int d = field.dim;
  const Tensor3 gam = raised(field, m);
  // dgam[a](i, j, l) = d/dx^a Gamma^l_{ij}
  std::vector<Tensor3> dgam(d, Tensor3(d));
  if (field.coordinate_frame) {
    for (int a = 0; a < d; ++a) {
      auto central = [&](double step) {
        Vec p = m, q = m;
        p[a] += step;
        q[a] -= step;
        return (1.0 / (2.0 * step)) * (raised(field, p) - raised(field, q));
      };
      dgam[a] = (1.0 / 3.0) * (4.0 * central(0.5 * h) - central(h));
    }
  }
  Tensor4 r(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double v = dgam[i](j, k, l) - dgam[j](i, k, l);
          for (int q = 0; q < d; ++q) {
            v += gam(j, k, q) * gam(i, q, l) - gam(i, k, q) * gam(j, q, l);
            v -= field.structure(i, j, q) * gam(q, k, l);
          }
          r(i, j, k, l) = v;
        }
  return r;
}

double sectional_curvature(const Tensor4& curv, const Mat& g, const Vec& x, const Vec& y) {
  const int d = curv.dim();
  Vec ryyx = Vec::Zero(d);  // R(X, Y) Y
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) ryyx[l] += x[i] * y[j] * y[k] * curv(i, j, k, l);
  const double num = pair_form(g, ryyx, x);
  const double den = pair_form(g, x, x) * pair_form(g, y, y) - std::pow(pair_form(g, x, y), 2);
  if (std::abs(den) < 1e-300) throw std::domain_error("sectional_curvature: degenerate plane");
  return num / den;
}

}  // namespace contrastgeo
