#pragma once

// Natural-gradient descent with the (pseudo-)inverse contrast metric.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrastgeo/groupoid.hpp"
#include "contrastgeo/linalg.hpp"

namespace contrastgeo {

class DomainExitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizeProblem {
  ContrastFunction contrast;
  SmoothFn objective;  // on base coordinates
  double eta = 0.1;
  int max_steps = 200;
  double gtol = 1e-8;
  double rank_tol = kDefaultRankTol;
  int max_halvings = 20;
};

/// L(theta) = F(theta, target).
SmoothFn contrast_objective(const ContrastFunction& f, const Vec& target);

OptimizeProblem make_problem(const ContrastFunction& f, const Vec& target, double eta, int max_steps,
                             double gtol = 1e-8);

struct StepResult {
  Vec theta;
  Vec update;        // theta' - theta
  double eta = 0.0;  // after halvings
  int halvings = 0;
  double condition = 1.0;
  int kernel_dim = 0;
};

/// theta' = theta - eta g^+ grad L, halving eta while theta' leaves the
/// domain.  Throws DomainExitError after max_halvings.
StepResult natural_step(const OptimizeProblem& problem, const Vec& theta);

struct TrajectoryRecord {
  int step = 0;
  Vec theta;
  double objective = 0.0;
  double grad_norm = 0.0;
  double condition = 1.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;  // records[0] is the start
  bool converged = false;
  int steps = 0;
  double koszul_residual = 0.0;
  bool koszul_violation = false;
  std::vector<std::string> diagnostics;

  const Vec& final_theta() const { return records.back().theta; }
};

/// Non-convergence and domain exits are reported in the trajectory.
Trajectory run(const OptimizeProblem& problem, const Vec& theta0);

/// Largest eta in {eta0, eta0/2, ...} whose first `trial_steps` steps from
/// theta0 do not increase the objective.
double probe_stable_eta(const OptimizeProblem& problem, const Vec& theta0, int trial_steps = 10);

}  // namespace contrastgeo
