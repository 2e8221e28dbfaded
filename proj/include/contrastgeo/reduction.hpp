#pragma once

// Singular metrics: kernel frames, Koszul and invariance diagnostics,
// transversal structure and reduction to the leaf space.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrastgeo/groupoid.hpp"
#include "contrastgeo/linalg.hpp"
#include "contrastgeo/tensors.hpp"

namespace contrastgeo {

/// Raised when a construction needs the Koszul condition and it fails.
class KoszulViolation : public std::runtime_error {
 public:
  KoszulViolation(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct KernelFrame {
  Vec base;
  int rank = 0;      // dimension of the kernel
  Mat kernel;        // d x rank, orthonormal
  Mat complement;    // d x (d - rank), orthonormal
  Vec eigenvalues;   // ascending by |lambda|
  double threshold = 0.0;
  bool indeterminate = false;

  int dim() const { return static_cast<int>(kernel.rows()); }
};

KernelFrame kernel_at(const ContrastFunction& f, const Vec& m, double rank_tol = kDefaultRankTol);

struct RankReport {
  bool constant = true;
  int rank = 0;  // rank of the metric at the first sample
  int samples = 0;
  std::vector<std::pair<Vec, int>> mismatches;
  std::vector<Vec> indeterminate;
};

RankReport check_constant_rank(const ContrastFunction& f, int samples, double rank_tol, Rng& rng);

/// max over frame X, Y and kernel Z of |X^L Y^L Z^R F| and |X^L Y^L Z^R F*|.
double koszul_residual(const ContrastFunction& f, const Vec& m, const KernelFrame& frame);

/// Smooth kernel frame near a reference point: U(x) = P(x) K0 (K0^T P(x) K0)^{-1/2}
/// with P(x) the kernel projector at x.  This is the gauge of maximal overlap
/// with the reference basis K0.
class KernelFieldFamily {
 public:
  KernelFieldFamily(ContrastFunction f, const KernelFrame& reference, double rank_tol = kDefaultRankTol);

  int count() const { return static_cast<int>(k0_.cols()); }
  Mat at(const Vec& x) const;
  /// d/dx of column `index`, by Richardson-extrapolated central differences.
  Mat jacobian(const Vec& x, int index, double h = 1e-3) const;

 private:
  ContrastFunction f_;
  Mat k0_;
  double rank_tol_;
};

/// max over kernel fields U and frame pairs (X, Y) of
/// |a(U) g(X, Y) - g([U, X], Y) - g(X, [U, Y])|.
double lie_derivative_residual(const ContrastFunction& f, const Vec& m, const KernelFrame& frame);

/// max over kernel field pairs of |complement part of [U_i, U_j]|.
double kernel_closure_residual(const ContrastFunction& f, const Vec& m, double rank_tol = kDefaultRankTol);

struct TransversalMetric {
  Mat metric;
  double condition = 1.0;
  bool ill_conditioned = false;  // condition > 1e8
};

TransversalMetric transversal_metric(const ContrastFunction& f, const Vec& m, const KernelFrame& frame);

struct TransversalConnections {
  Tensor3 primal;  // in complement coordinates
  Tensor3 dual;
  double koszul_residual = 0.0;
};

/// Throws KoszulViolation when the Koszul residual exceeds tol.
TransversalConnections transversal_connections(const ContrastFunction& f, const Vec& m, const KernelFrame& frame,
                                               double tol = 1e-8);

enum class KoszulRoute { Formula, Connection };

/// Complement-valued D_X Y solving g(D_X Y, C_c) = b_c, where b is the
/// Koszul formula (or the X^L Y^L Z^R pattern for the Connection route).
Vec koszul_derivative(const ContrastFunction& f, const Vec& m, const KernelFrame& frame, const SectionField& x,
                      const SectionField& y, KoszulRoute route = KoszulRoute::Formula, double tol = 1e-8);

using VectorField = std::function<Vec(const Vec&)>;
using FieldJacobian = std::function<Mat(const Vec&)>;

struct LeafTransport {
  Vec start;
  Vec end;
  Mat map;               // complement coordinates at start -> at end
  Mat metric_start;      // transversal metrics in those coordinates
  Mat metric_end;
  double invariance = 0.0;  // |map^T g_end map - g_start|_max
};

/// RK4 on (x, Phi) with x' = U(x), Phi' = DU(x) Phi, Phi(0) = complement at
/// x0.  Throws std::domain_error if the path leaves the chart domain or the
/// kernel rank changes.
LeafTransport leaf_transport(const ContrastFunction& f, const VectorField& field, const FieldJacobian& jacobian,
                             const Vec& m0, double time, int steps, double rank_tol = kDefaultRankTol);

/// Transport along kernel field `index` of the family anchored at m0.
LeafTransport leaf_transport(const ContrastFunction& f, const Vec& m0, int index, double time, int steps = 100,
                             double rank_tol = kDefaultRankTol);

/// Model-supplied quotient M -> M0 with a section and the leaf action
/// (m, s) -> point on the leaf through m reached by parameters s.
struct QuotientChart {
  std::string name;
  int quotient_dim = 0;
  VectorFn projection;   // d -> quotient_dim
  VectorFn section;      // quotient_dim -> d
  VectorFn leaf_action;  // d + r -> d
  /// d/ds_j leaf_action(x, s) at s = 0, one field per leaf parameter; when
  /// empty the kernel field family is used instead.
  std::vector<VectorFn> generators;
  Domain domain;  // sampling region of the quotient chart
  /// Optional closed-form metric on the quotient that the reduced metric
  /// should be proportional to.
  std::function<Mat(const Vec&)> reference_metric;

  int leaf_dim() const { return leaf_action.arity() - section.outputs(); }
};

struct ReduceOptions {
  int fiber_checks = 3;
  double tol = 1e-8;
  double rank_tol = kDefaultRankTol;
  double fiber_offset = 0.3;  // leaf parameters s_k = k * offset * (1, ..., 1)
  double transport_time = 0.5;
  int transport_steps = 50;
};

struct ReducedStructure {
  Vec point;           // in the quotient chart
  Vec representative;  // sigma(point)
  Mat metric;
  Tensor3 gamma;
  Tensor3 gamma_star;
  double condition = 1.0;
  double section_residual = 0.0;         // |pi(sigma(u)) - u|
  double koszul_residual = 0.0;          // max along the fiber points
  double representative_residual = 0.0;  // max deviation between fiber points
  double transport_residual = 0.0;       // leaf-transport invariance
  bool koszul = true;
  bool foliated = true;
  std::vector<std::string> diagnostics;
};

/// Contrast on M0 x M0: F0(u, u') = F(sigma(u), sigma(u')).
ContrastFunction pulled_back_contrast(const ContrastFunction& f, const VectorFn& section, const Domain& domain = {});

/// Reduced metric and symbols at m0 in the quotient chart.  Failures of the
/// Koszul condition or representative independence are reported in the
/// result, not thrown.
ReducedStructure reduce(const ContrastFunction& f, const QuotientChart& chart, const Vec& m0,
                        const ReduceOptions& opts = {});

}  // namespace contrastgeo
