#pragma once

// Groupoid backends and the invariant-derivative calculus.
//
// Elements are stored as flat real coordinate vectors:
//   pair groupoid M x M over R^n : (zeta, xi), 2n reals; t = zeta, s = xi
//   matrix Lie group (k x k)     : realified entries, (Re, Im) interleaved,
//                                  row-major, 2k^2 reals; base is a point
//
// Invariant fields act on jets by their flows truncated to first order in a
// nilpotent seed.  Because eps^2 = 0 the truncation is exact, so iterating
// pushes and reading the all-seeds coefficient yields X(Y(Z F)) exactly.

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contrastgeo/jet.hpp"
#include "contrastgeo/rng.hpp"

namespace contrastgeo {

using CMat = Eigen::MatrixXcd;

enum class Side { Left, Right };

class NonComposableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Section of the algebroid E over the base: base coordinates -> components.
class SectionField {
 public:
  explicit SectionField(VectorFn fn) : fn_(std::move(fn)) {}

  static SectionField constant(int base_dim, const Vec& components) {
    return SectionField(VectorFn::constant(base_dim, components));
  }

  int base_dim() const { return fn_.arity(); }
  int rank() const { return fn_.outputs(); }
  const VectorFn& fn() const { return fn_; }

  Vec at(const Vec& m) const { return fn_(m); }
  JetVec at(std::span<const Jet3> m) const { return fn_(m); }

  /// f * X for a base function f.
  SectionField scaled(const SmoothFn& f) const;

 private:
  VectorFn fn_;
};

/// Sampling region of the base manifold (chart domain).
struct Domain {
  std::function<Vec(Rng&)> sample;
  std::function<bool(const Vec&)> contains;

  /// Samples uniformly from [lo, hi].  When `bounded` is false the chart is
  /// all of R^n and only finiteness is required for membership.
  static Domain box(const Vec& lo, const Vec& hi, bool bounded = true);
};

class GroupoidBackend {
 public:
  virtual ~GroupoidBackend() = default;

  virtual std::string name() const = 0;
  virtual int base_dim() const = 0;
  virtual int rank() const = 0;
  virtual int element_dim() const = 0;

  virtual Vec unit(const Vec& m) const = 0;
  virtual Vec source(const Vec& g) const = 0;
  virtual Vec target(const Vec& g) const = 0;
  virtual Vec compose(const Vec& g1, const Vec& g2) const = 0;
  virtual Vec inverse(const Vec& g) const = 0;
  virtual JetVec inverse(std::span<const Jet3> g) const = 0;

  virtual Vec anchor(const Vec& m, const Vec& x) const = 0;
  virtual Vec bracket(const SectionField& x, const SectionField& y, const Vec& m) const = 0;

  /// g -> flow of X^L (or X^R) for nilpotent time eps_seed.
  virtual JetVec push(std::span<const Jet3> g, const SectionField& x, Side side, int seed) const = 0;

  /// Moves a unit along a base tangent vector for nilpotent time eps_seed.
  virtual JetVec push_base(std::span<const Jet3> g, const Vec& tangent, int seed) const = 0;
};

/// M x M over a chart of R^n.  E = TM with identity anchor.
class PairGroupoid final : public GroupoidBackend {
 public:
  explicit PairGroupoid(int n);

  std::string name() const override { return "pair"; }
  int base_dim() const override { return n_; }
  int rank() const override { return n_; }
  int element_dim() const override { return 2 * n_; }

  Vec unit(const Vec& m) const override;
  Vec source(const Vec& g) const override { return g.tail(n_); }
  Vec target(const Vec& g) const override { return g.head(n_); }
  Vec compose(const Vec& g1, const Vec& g2) const override;
  Vec inverse(const Vec& g) const override;
  JetVec inverse(std::span<const Jet3> g) const override;

  Vec anchor(const Vec& m, const Vec& x) const override;
  Vec bracket(const SectionField& x, const SectionField& y, const Vec& m) const override;

  // X^L acts as +X on the second slot, X^R as -X on the first slot, which
  // realizes X^L(f^L) = (a(X) f)^L and X^R(f^R) = -(a(X) f)^R.
  JetVec push(std::span<const Jet3> g, const SectionField& x, Side side, int seed) const override;
  JetVec push_base(std::span<const Jet3> g, const Vec& tangent, int seed) const override;

 private:
  int n_;
};

/// Closed matrix group given by a basis of its Lie algebra.  The base is a
/// point, the anchor vanishes, and the bracket is the matrix commutator.
class MatrixLieGroup final : public GroupoidBackend {
 public:
  explicit MatrixLieGroup(std::vector<CMat> basis, std::string name = "matrix_group");

  static MatrixLieGroup unitary(int k);
  static MatrixLieGroup special_orthogonal(int k);

  std::string name() const override { return name_; }
  int base_dim() const override { return 0; }
  int rank() const override { return static_cast<int>(basis_.size()); }
  int element_dim() const override { return 2 * k_ * k_; }
  int matrix_size() const { return k_; }
  const std::vector<CMat>& basis() const { return basis_; }

  Vec unit(const Vec& m) const override;
  Vec source(const Vec&) const override { return Vec(0); }
  Vec target(const Vec&) const override { return Vec(0); }
  Vec compose(const Vec& g1, const Vec& g2) const override;
  Vec inverse(const Vec& g) const override;
  JetVec inverse(std::span<const Jet3> g) const override;

  Vec anchor(const Vec& m, const Vec& x) const override;
  Vec bracket(const SectionField& x, const SectionField& y, const Vec& m) const override;

  JetVec push(std::span<const Jet3> g, const SectionField& x, Side side, int seed) const override;
  JetVec push_base(std::span<const Jet3> g, const Vec& tangent, int seed) const override;

  CMat to_matrix(const Vec& g) const;
  Vec from_matrix(const CMat& m) const;
  CMat algebra_element(const Vec& components) const;
  /// Coordinates of an algebra matrix in the basis; throws when the
  /// least-squares residual exceeds tol.
  Vec algebra_coordinates(const CMat& a, double tol = 1e-8) const;
  /// exp(sum_a c_a B_a) by scaling-and-squaring Pade.
  Vec exp(const Vec& components) const;
  Vec random_element(Rng& rng, double scale = 1.0) const;

 private:
  int k_;
  std::vector<CMat> basis_;
  Mat realified_basis_;  // 2k^2 x d
  bool unitary_ = false;  // skew-Hermitian basis: inverse is the adjoint
  std::string name_;
};

/// Contrast function on a groupoid: vanishes to first order on the units.
class ContrastFunction {
 public:
  ContrastFunction() = default;
  ContrastFunction(std::shared_ptr<const GroupoidBackend> backend, SmoothFn fn, Domain domain = {});

  const GroupoidBackend& backend() const { return *backend_; }
  std::shared_ptr<const GroupoidBackend> backend_ptr() const { return backend_; }
  const SmoothFn& fn() const { return fn_; }
  const Domain& domain() const { return domain_; }
  int rank() const { return backend_->rank(); }

  double operator()(const Vec& g) const { return fn_(g); }
  Jet3 operator()(std::span<const Jet3> g) const { return fn_(g); }

 private:
  std::shared_ptr<const GroupoidBackend> backend_;
  SmoothFn fn_;
  Domain domain_;
};

/// F* = F o inv.
ContrastFunction dual_contrast(const ContrastFunction& f);

/// One factor of an iterated derivative.  Base factors differentiate along
/// the unit manifold (the anchor of the section at m) and must come first.
struct InvariantStep {
  enum class Kind { Left, Right, Base };
  Kind kind;
  SectionField section;

  static InvariantStep left(SectionField s) { return {Kind::Left, std::move(s)}; }
  static InvariantStep right(SectionField s) { return {Kind::Right, std::move(s)}; }
  static InvariantStep base(SectionField s) { return {Kind::Base, std::move(s)}; }
};

/// steps[0] is the outermost operator: X1 (X2 (X3 F)) restricted to the unit over m.
double invariant_derivative(const ContrastFunction& f, const Vec& m, std::span<const InvariantStep> steps);

struct Direction {
  Vec components;
  Side side;
};

/// Iterated invariant derivative along constant algebroid directions,
/// e.g. {(X, L), (Y, L), (Z, R)} gives X^L Y^L Z^R F at the unit over m.
double lrz_derivative(const ContrastFunction& f, const Vec& m, std::span<const Direction> pattern);

Vec anchor(const GroupoidBackend& backend, const Vec& m, const Vec& x);
Vec bracket(const GroupoidBackend& backend, const SectionField& x, const SectionField& y, const Vec& m);

struct ContrastViolation {
  Vec point;
  double value;
  double differential_norm;
};

struct ContrastReport {
  bool passed = true;
  double tolerance = 0.0;
  int samples = 0;
  double max_value = 0.0;
  double max_differential = 0.0;
  std::vector<ContrastViolation> violations;  // worst first
};

/// max(|F|, |dF|) at the unit over m, with dF taken along left, right and
/// base directions.
double contrast_residual(const ContrastFunction& f, const Vec& m);

/// |F| and |dF| at `samples` random unit points.  Violations are reported,
/// not thrown.
ContrastReport check_contrast(const ContrastFunction& f, int samples, double tol, Rng& rng);

}  // namespace contrastgeo
