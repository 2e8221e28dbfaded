#include "contrastgeo/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace contrastgeo {

namespace {

bool is_pair(const GroupoidBackend& b) { return dynamic_cast<const PairGroupoid*>(&b) != nullptr; }

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// (C_i)(k, a) = c(i, a, k): matrix of ad(e_i) in the frame.
Mat ad_matrix(const Tensor3& c, int i) {
  const int d = c.dim();
  Mat a(d, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) a(k, j) = c(i, j, k);
  return a;
}

Mat ad(const Tensor3& c, const Vec& u) {
  const int d = c.dim();
  Mat a = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) a += u[i] * ad_matrix(c, i);
  return a;
}

Mat richardson_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, double h) {
  const Vec f0 = fn(x);
  Mat j(f0.size(), x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    auto central = [&](double step) {
      Vec p = x, q = x;
      p[a] += step;
      q[a] -= step;
      return Vec((fn(p) - fn(q)) / (2.0 * step));
    };
    j.col(a) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  return j;
}

}  // namespace

KernelFrame kernel_at(const ContrastFunction& f, const Vec& m, double rank_tol) {
  const SpectralSplit s = spectral_split(metric(f, m), rank_tol);
  KernelFrame k;
  k.base = m;
  k.rank = s.kernel_dim;
  k.kernel = s.kernel();
  k.complement = s.complement();
  k.eigenvalues = s.eigenvalues;
  k.threshold = s.threshold;
  k.indeterminate = s.indeterminate;
  return k;
}

RankReport check_constant_rank(const ContrastFunction& f, int samples, double rank_tol, Rng& rng) {
  if (samples < 2) throw std::invalid_argument("check_constant_rank: samples must be >= 2");
  RankReport r;
  r.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vec m = f.domain().sample(rng);
    const KernelFrame k = kernel_at(f, m, rank_tol);
    const int rank = k.dim() - k.rank;
    if (s == 0) r.rank = rank;
    if (rank != r.rank) r.mismatches.emplace_back(m, rank);
    if (k.indeterminate) r.indeterminate.push_back(m);
  }
  r.constant = r.mismatches.empty();
  return r;
}

double koszul_residual(const ContrastFunction& f, const Vec& m, const KernelFrame& frame) {
  const int d = frame.dim();
  const ContrastFunction fs = dual_contrast(f);
  double r = 0.0;
  for (int z = 0; z < frame.rank; ++z) {
    const Vec zc = frame.kernel.col(z);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const Direction p[] = {{Vec::Unit(d, i), Side::Left}, {Vec::Unit(d, j), Side::Left}, {zc, Side::Right}};
        r = std::max({r, std::abs(lrz_derivative(f, m, p)), std::abs(lrz_derivative(fs, m, p))});
      }
    }
  }
  return r;
}

KernelFieldFamily::KernelFieldFamily(ContrastFunction f, const KernelFrame& reference, double rank_tol)
    : f_(std::move(f)), k0_(reference.kernel), rank_tol_(rank_tol) {}

Mat KernelFieldFamily::at(const Vec& x) const {
  if (f_.backend().base_dim() == 0) return k0_;
  const KernelFrame k = kernel_at(f_, x, rank_tol_);
  if (k.rank != count()) {
    std::ostringstream os;
    os << "kernel field: rank changes from " << count() << " to " << k.rank;
    throw std::domain_error(os.str());
  }
  const Mat p = k.kernel * k.kernel.transpose();
  const Mat overlap = k0_.transpose() * p * k0_;
  Eigen::SelfAdjointEigenSolver<Mat> es(overlap);
  if (count() > 0 && es.eigenvalues().minCoeff() < 1e-6)
    throw std::domain_error("kernel field: continuation lost overlap with the reference kernel");
  return p * k0_ * es.operatorInverseSqrt();
}

Mat KernelFieldFamily::jacobian(const Vec& x, int index, double h) const {
  const int d = static_cast<int>(k0_.rows());
  if (f_.backend().base_dim() == 0) return Mat::Zero(d, 0);
  return richardson_jacobian([&](const Vec& p) { return Vec(at(p).col(index)); }, x, h);
}

double lie_derivative_residual(const ContrastFunction& f, const Vec& m, const KernelFrame& frame) {
  if (frame.rank == 0) return 0.0;
  const GroupoidBackend& b = f.backend();
  const Mat g = metric(f, m);
  const Tensor3 dg = metric_gradient(f, m);
  const Tensor3 c = structure_constants(b, m);
  const KernelFieldFamily fam(f, frame);
  const int d = frame.dim();
  double r = 0.0;
  for (int k = 0; k < frame.rank; ++k) {
    const Vec u = frame.kernel.col(k);
    // column a of bmat is -[U, e_a]
    Mat bmat = -ad(c, u);
    if (b.base_dim() > 0) bmat += fam.jacobian(m, k);
    Mat lie = g * bmat + bmat.transpose() * g;
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < d; ++a)
        for (int e = 0; e < d; ++e) lie(a, e) += u[i] * dg(i, a, e);
    r = std::max(r, max_abs(lie));
  }
  return r;
}

double kernel_closure_residual(const ContrastFunction& f, const Vec& m, double rank_tol) {
  const KernelFrame frame = kernel_at(f, m, rank_tol);
  if (frame.rank < 2) return 0.0;
  const GroupoidBackend& b = f.backend();
  const Tensor3 c = structure_constants(b, m);
  const KernelFieldFamily fam(f, frame, rank_tol);
  std::vector<Mat> jac;
  for (int k = 0; k < frame.rank; ++k) jac.push_back(b.base_dim() > 0 ? fam.jacobian(m, k) : Mat::Zero(frame.dim(), frame.dim()));
  double r = 0.0;
  for (int i = 0; i < frame.rank; ++i) {
    for (int j = i + 1; j < frame.rank; ++j) {
      const Vec ui = frame.kernel.col(i), uj = frame.kernel.col(j);
      const Vec br = jac[j] * ui - jac[i] * uj + ad(c, ui) * uj;
      r = std::max(r, (frame.complement.transpose() * br).norm());
    }
  }
  return r;
}

TransversalMetric transversal_metric(const ContrastFunction& f, const Vec& m, const KernelFrame& frame) {
  TransversalMetric t;
  t.metric = frame.complement.transpose() * metric(f, m) * frame.complement;
  t.condition = condition_number(t.metric);
  t.ill_conditioned = t.condition > 1e8;
  return t;
}

TransversalConnections transversal_connections(const ContrastFunction& f, const Vec& m, const KernelFrame& frame,
                                               double tol) {
  TransversalConnections t;
  t.koszul_residual = koszul_residual(f, m, frame);
  if (t.koszul_residual > tol) {
    std::ostringstream os;
    os << "transversal connections refused: Koszul residual " << t.koszul_residual << " exceeds " << tol;
    throw KoszulViolation(os.str(), t.koszul_residual);
  }
  const int q = static_cast<int>(frame.complement.cols());
  const ContrastFunction fs = dual_contrast(f);
  t.primal = Tensor3(q);
  t.dual = Tensor3(q);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      for (int c = 0; c < q; ++c) {
        const Direction p[] = {{frame.complement.col(a), Side::Left},
                               {frame.complement.col(b), Side::Left},
                               {frame.complement.col(c), Side::Right}};
        t.primal(a, b, c) = lrz_derivative(f, m, p);
        t.dual(a, b, c) = lrz_derivative(fs, m, p);
      }
    }
  }
  return t;
}

Vec koszul_derivative(const ContrastFunction& f, const Vec& m, const KernelFrame& frame, const SectionField& x,
                      const SectionField& y, KoszulRoute route, double tol) {
  const double violation =
      route == KoszulRoute::Formula ? lie_derivative_residual(f, m, frame) : koszul_residual(f, m, frame);
  if (violation > tol) {
    std::ostringstream os;
    os << "Koszul derivative refused: kernel invariance residual " << violation << " exceeds " << tol;
    throw KoszulViolation(os.str(), violation);
  }
  const int q = static_cast<int>(frame.complement.cols());
  const int n = f.backend().base_dim();
  Vec rhs(q);
  for (int c = 0; c < q; ++c) {
    const SectionField z = SectionField::constant(n, frame.complement.col(c));
    rhs[c] = route == KoszulRoute::Formula ? koszul_value(f, m, x, y, z) : connection_value(f, m, x, y, z);
  }
  const Mat gt = transversal_metric(f, m, frame).metric;
  return frame.complement * gt.ldlt().solve(rhs);
}

LeafTransport leaf_transport(const ContrastFunction& f, const VectorField& field, const FieldJacobian& jacobian,
                             const Vec& m0, double time, int steps, double rank_tol) {
  if (!is_pair(f.backend())) throw std::invalid_argument("leaf_transport: requires the pair groupoid backend");
  if (steps < 1) throw std::invalid_argument("leaf_transport: steps must be >= 1");
  const KernelFrame k0 = kernel_at(f, m0, rank_tol);
  const Domain& dom = f.domain();

  struct State {
    Vec x;
    Mat phi;
  };
  auto rhs = [&](const State& s) { return State{field(s.x), jacobian(s.x) * s.phi}; };
  auto axpy = [](const State& s, double h, const State& k) { return State{s.x + h * k.x, s.phi + h * k.phi}; };

  State s{m0, k0.complement};
  const double h = time / steps;
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(s);
    const State k2 = rhs(axpy(s, 0.5 * h, k1));
    const State k3 = rhs(axpy(s, 0.5 * h, k2));
    const State k4 = rhs(axpy(s, h, k3));
    s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.phi += h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
    if (dom.contains && !dom.contains(s.x)) {
      std::ostringstream os;
      os << "leaf_transport: path leaves the chart domain at step " << i + 1;
      throw std::domain_error(os.str());
    }
    if (kernel_at(f, s.x, rank_tol).rank != k0.rank) {
      std::ostringstream os;
      os << "leaf_transport: kernel rank changes at step " << i + 1;
      throw std::domain_error(os.str());
    }
  }

  const KernelFrame k1 = kernel_at(f, s.x, rank_tol);
  LeafTransport t;
  t.start = m0;
  t.end = s.x;
  t.map = k1.complement.transpose() * s.phi;
  t.metric_start = transversal_metric(f, m0, k0).metric;
  t.metric_end = transversal_metric(f, s.x, k1).metric;
  t.invariance = max_abs(t.map.transpose() * t.metric_end * t.map - t.metric_start);
  return t;
}

LeafTransport leaf_transport(const ContrastFunction& f, const Vec& m0, int index, double time, int steps,
                             double rank_tol) {
  const KernelFrame k0 = kernel_at(f, m0, rank_tol);
  if (index < 0 || index >= k0.rank) throw std::out_of_range("leaf_transport: kernel section index out of range");
  auto fam = std::make_shared<KernelFieldFamily>(f, k0, rank_tol);
  return leaf_transport(
      f, [fam, index](const Vec& x) { return Vec(fam->at(x).col(index)); },
      [fam, index](const Vec& x) { return fam->jacobian(x, index); }, m0, time, steps, rank_tol);
}

ContrastFunction pulled_back_contrast(const ContrastFunction& f, const VectorFn& section, const Domain& domain) {
  const int q = section.arity();
  const int d = section.outputs();
  if (f.fn().arity() != 2 * d) throw std::invalid_argument("pulled_back_contrast: section does not land in the base");
  SmoothFn fn = f.fn();
  SmoothFn pulled(2 * q, [fn, section, q](std::span<const Jet3> u) {
    JetVec g = section(u.subspan(0, q));
    const JetVec b = section(u.subspan(q, q));
    g.insert(g.end(), b.begin(), b.end());
    return fn(std::span<const Jet3>(g));
  });
  return ContrastFunction(std::make_shared<PairGroupoid>(q), std::move(pulled), domain);
}

namespace {

VectorFn fiber_section(const QuotientChart& chart, const Vec& s) {
  const VectorFn sec = chart.section;
  const VectorFn act = chart.leaf_action;
  return VectorFn(sec.arity(), sec.outputs(), [sec, act, s](std::span<const Jet3> u) {
    JetVec x = sec(u);
    for (Eigen::Index i = 0; i < s.size(); ++i) x.emplace_back(s[i]);
    return act(std::span<const Jet3>(x));
  });
}

struct Slice {
  Mat metric;
  Tensor3 gamma, gamma_star;
};

Slice slice(const ContrastFunction& f0, const Vec& u) {
  return {metric(f0, u), christoffel_lowered(f0, u), christoffel_lowered(dual_contrast(f0), u)};
}

double slice_distance(const Slice& a, const Slice& b) {
  return std::max({max_abs(a.metric - b.metric), max_abs_diff(a.gamma, b.gamma), max_abs_diff(a.gamma_star, b.gamma_star)});
}

}  // namespace

ReducedStructure reduce(const ContrastFunction& f, const QuotientChart& chart, const Vec& m0,
                        const ReduceOptions& opts) {
  if (!is_pair(f.backend())) throw std::invalid_argument("reduce: requires the pair groupoid backend");
  if (m0.size() != chart.quotient_dim) throw std::invalid_argument("reduce: quotient point dimension mismatch");
  if (opts.fiber_checks < 1) throw std::invalid_argument("reduce: fiber_checks must be >= 1");

  ReducedStructure r;
  r.point = m0;
  r.representative = chart.section(m0);
  r.section_residual = (chart.projection(r.representative) - m0).cwiseAbs().maxCoeff();

  const ContrastFunction f0 = pulled_back_contrast(f, chart.section, chart.domain);
  const Slice base = slice(f0, m0);
  r.metric = base.metric;
  r.gamma = base.gamma;
  r.gamma_star = base.gamma_star;
  r.condition = condition_number(r.metric);
  if (r.condition > 1e8) r.diagnostics.push_back("reduced metric is ill-conditioned");

  const int leaf = chart.leaf_dim();
  const double scale = std::max(1.0, max_abs(base.metric));
  for (int k = 0; k < opts.fiber_checks; ++k) {
    const Vec s = Vec::Constant(leaf, k * opts.fiber_offset);
    const VectorFn sec_k = fiber_section(chart, s);
    const Vec p = sec_k(m0);

    const KernelFrame frame = kernel_at(f, p, opts.rank_tol);
    if (frame.indeterminate) r.diagnostics.push_back("indeterminate kernel rank at a fiber point");
    r.koszul_residual = std::max(r.koszul_residual, koszul_residual(f, p, frame));

    if (k > 0) {
      const ContrastFunction fk = pulled_back_contrast(f, sec_k, chart.domain);
      r.representative_residual = std::max(r.representative_residual, slice_distance(slice(fk, m0), base));
    }

    const int fields = chart.generators.empty() ? frame.rank : static_cast<int>(chart.generators.size());
    for (int j = 0; j < fields; ++j) {
      try {
        LeafTransport t;
        if (chart.generators.empty()) {
          t = leaf_transport(f, p, j, opts.transport_time, opts.transport_steps, opts.rank_tol);
        } else {
          const VectorFn gen = chart.generators[j];
          t = leaf_transport(
              f, [gen](const Vec& x) { return gen(x); }, [gen](const Vec& x) { return contrastgeo::jacobian(gen, x); },
              p, opts.transport_time, opts.transport_steps, opts.rank_tol);
        }
        r.transport_residual = std::max(r.transport_residual, t.invariance);
      } catch (const std::domain_error& e) {
        r.foliated = false;
        r.diagnostics.push_back(e.what());
      }
    }
  }

  r.koszul = r.koszul_residual <= opts.tol;
  if (!r.koszul) r.diagnostics.push_back("Koszul condition fails along the fiber");
  if (r.representative_residual > opts.tol * scale) {
    r.foliated = false;
    r.diagnostics.push_back("reduced data depends on the representative in the fiber");
  }
  if (r.transport_residual > opts.tol * scale) {
    r.foliated = false;
    r.diagnostics.push_back("transversal metric is not invariant under leaf transport");
  }
  r.diagnostics.push_back("normalizer transitivity checked at sample level");
  return r;
}

}  // namespace contrastgeo
