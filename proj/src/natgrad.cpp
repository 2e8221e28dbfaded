#include "contrastgeo/natgrad.hpp"

#include <cmath>
#include <sstream>

#include "contrastgeo/reduction.hpp"
#include "contrastgeo/tensors.hpp"

namespace contrastgeo {

SmoothFn contrast_objective(const ContrastFunction& f, const Vec& target) {
  const int n = f.backend().base_dim();
  if (n == 0) throw std::invalid_argument("contrast_objective: base is a point; nothing to optimize");
  if (target.size() != n) throw std::invalid_argument("contrast_objective: target dimension mismatch");
  SmoothFn fn = f.fn();
  auto backend = f.backend_ptr();
  return SmoothFn(n, [fn, target, n](std::span<const Jet3> theta) {
    JetVec g(theta.begin(), theta.end());
    for (int i = 0; i < n; ++i) g.emplace_back(target[i]);
    return fn(std::span<const Jet3>(g));
  });
}

OptimizeProblem make_problem(const ContrastFunction& f, const Vec& target, double eta, int max_steps, double gtol) {
  if (!(eta > 0.0)) throw std::invalid_argument("optimizer: eta must be positive");
  if (max_steps < 0) throw std::invalid_argument("optimizer: max_steps must be >= 0");
  return OptimizeProblem{f, contrast_objective(f, target), eta, max_steps, gtol};
}

namespace {

bool inside(const OptimizeProblem& p, const Vec& theta) {
  if (!theta.allFinite()) return false;
  return !p.contrast.domain().contains || p.contrast.domain().contains(theta);
}

}  // namespace

StepResult natural_step(const OptimizeProblem& problem, const Vec& theta) {
  if (!inside(problem, theta)) throw DomainExitError("natural_step: starting point outside the domain");
  const Mat g = metric(problem.contrast, theta);
  const SpectralSplit split = spectral_split(g, problem.rank_tol);
  const Mat ginv = pseudo_inverse(g, problem.rank_tol);
  const Vec direction = -(ginv * gradient(problem.objective, theta));

  StepResult r;
  r.kernel_dim = split.kernel_dim;
  r.condition = condition_number(split.complement().transpose() * g * split.complement());
  double eta = problem.eta;
  for (int h = 0; h <= problem.max_halvings; ++h) {
    const Vec next = theta + eta * direction;
    if (inside(problem, next)) {
      r.theta = next;
      r.update = next - theta;
      r.eta = eta;
      r.halvings = h;
      return r;
    }
    eta *= 0.5;
  }
  std::ostringstream os;
  os << "natural_step: update leaves the domain after " << problem.max_halvings << " halvings";
  throw DomainExitError(os.str());
}

Trajectory run(const OptimizeProblem& problem, const Vec& theta0) {
  Trajectory t;
  {
    const KernelFrame k = kernel_at(problem.contrast, theta0, problem.rank_tol);
    if (k.rank > 0) {
      t.koszul_residual = koszul_residual(problem.contrast, theta0, k);
      if (t.koszul_residual > 1e-8) {
        t.koszul_violation = true;
        std::ostringstream os;
        os << "Koszul violation (residual " << t.koszul_residual
           << "): kernel-quotient interpretation refused; pseudo-inverse updates used";
        t.diagnostics.push_back(os.str());
      }
    }
  }

  auto record = [&](int step, const Vec& theta) {
    TrajectoryRecord r;
    r.step = step;
    r.theta = theta;
    r.objective = problem.objective(theta);
    r.grad_norm = gradient(problem.objective, theta).norm();
    const Mat g = metric(problem.contrast, theta);
    const SpectralSplit s = spectral_split(g, problem.rank_tol);
    r.condition = condition_number(s.complement().transpose() * g * s.complement());
    t.records.push_back(r);
    return r.grad_norm;
  };

  Vec theta = theta0;
  double gnorm = record(0, theta);
  for (int step = 1; step <= problem.max_steps && !(gnorm < problem.gtol); ++step) {
    try {
      theta = natural_step(problem, theta).theta;
    } catch (const DomainExitError& e) {
      t.diagnostics.push_back(e.what());
      break;
    }
    t.steps = step;
    gnorm = record(step, theta);
  }
  t.converged = gnorm < problem.gtol;
  if (!t.converged) t.diagnostics.push_back("did not converge");
  return t;
}

double probe_stable_eta(const OptimizeProblem& problem, const Vec& theta0, int trial_steps) {
  OptimizeProblem p = problem;
  for (int attempt = 0; attempt < 30; ++attempt) {
    bool monotone = true;
    Vec theta = theta0;
    double prev = p.objective(theta);
    try {
      for (int s = 0; s < trial_steps && monotone; ++s) {
        theta = natural_step(p, theta).theta;
        const double v = p.objective(theta);
        monotone = v <= prev + 1e-15 * std::max(1.0, std::abs(prev));
        prev = v;
      }
    } catch (const DomainExitError&) {
      monotone = false;
    }
    if (monotone) return p.eta;
    p.eta *= 0.5;
  }
  return p.eta;
}

}  // namespace contrastgeo
