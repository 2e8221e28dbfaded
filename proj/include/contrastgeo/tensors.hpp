#pragma once

// Dualistic structure induced by a contrast function.
//
// Frame: constant sections e_a (coordinate fields on the pair groupoid, the
// fixed algebra basis on a group).  All Christoffel data is lowered:
//   gamma(i, j, l) = g(nabla_{e_i} e_j, e_l) = e_i^L e_j^L e_l^R F |_M.

#include <functional>
#include <vector>

#include "contrastgeo/groupoid.hpp"
#include "contrastgeo/linalg.hpp"

namespace contrastgeo {

// Values on general sections.  Non-constant sections are differentiated
// through the jet pushes, so derivation terms are included exactly.

/// g^F(X, Y) = X^L Y^L F |_M.
double metric_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y);

/// a(X) g(Y, Z): derivative of the metric function along the anchor of X.
double metric_derivative(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                         const SectionField& z);

/// g(nabla^F_X Y, Z) = X^L Y^L Z^R F |_M.
double connection_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                        const SectionField& z);

/// g(D_X Y, Z) from the six-term Koszul formula (halved).
double koszul_value(const ContrastFunction& f, const Vec& m, const SectionField& x, const SectionField& y,
                    const SectionField& z);

// Frame components.

Mat metric(const ContrastFunction& f, const Vec& m);
Tensor3 christoffel_lowered(const ContrastFunction& f, const Vec& m);
/// T = Gamma^F - Gamma^{F*}.
Tensor3 skewness(const ContrastFunction& f, const Vec& m);
/// Koszul-formula route; independent of the third-jet patterns.
Tensor3 levi_civita_lowered(const ContrastFunction& f, const Vec& m);
/// Gamma^LC + (alpha / 2) T with T = Gamma^F - Gamma^{F*}, so alpha = +1
/// gives nabla^F and alpha = -1 gives nabla^{F*}.
Tensor3 alpha_connection(const ContrastFunction& f, const Vec& m, double alpha);

/// dg(i, j, l) = a(e_i) g(e_j, e_l).
Tensor3 metric_gradient(const ContrastFunction& f, const Vec& m);

/// Structure constants c(i, j, k): [e_i, e_j] = sum_k c(i, j, k) e_k.
Tensor3 structure_constants(const GroupoidBackend& backend, const Vec& m);

/// max |Gamma^F_{ij,l} + Gamma^{F*}_{il,j} - a(e_i) g_{jl}|.
double duality_residual(const ContrastFunction& f, const Vec& m);
double duality_residual(const Tensor3& gamma, const Tensor3& gamma_star, const Tensor3& dg);

/// Sections used by torsion_residual: e_k, x_k e_k and x_{k+1} e_k on the
/// pair groupoid (so that brackets do not vanish), the constant basis on a group.
std::vector<SectionField> torsion_test_sections(const GroupoidBackend& backend);

/// max over test pairs (X, Y) and frame Z of
/// |g(nabla_X Y, Z) - g(nabla_Y X, Z) - g([X, Y], Z)|, for both F and F*.
double torsion_residual(const ContrastFunction& f, const Vec& m);
double torsion_residual(const ContrastFunction& f, const Vec& m, const std::vector<SectionField>& sections);

/// Lowered connection data on a chart with coordinate frame (or constant
/// algebra frame with the given structure constants).
struct ConnectionField {
  int dim = 0;
  bool coordinate_frame = true;  // false: no base derivatives (group frame)
  Tensor3 structure;             // c(i, j, k); zero for coordinate frames
  std::function<Mat(const Vec&)> metric;
  std::function<Tensor3(const Vec&)> lowered;
};

enum class ConnectionKind { Primal, Dual, LeviCivita };

ConnectionField connection_field(const ContrastFunction& f, ConnectionKind kind);

/// curv(i, j, k, l) = l-th component of R(e_i, e_j) e_k.  Symbols are raised
/// with the inverse metric and differentiated by Richardson-extrapolated
/// central differences with step h.
Tensor4 curvature(const ConnectionField& field, const Vec& m, double h = 1e-3);

/// <R(X, Y) Y, X> / (|X|^2 |Y|^2 - <X, Y>^2).
double sectional_curvature(const Tensor4& curv, const Mat& g, const Vec& x, const Vec& y);

}  // namespace contrastgeo
