#pragma once

// Kinematic substrate: phase spaces with open domains, scalar fields with
// gradients, constant symplectic forms, Hamiltonian vector fields, and
// Poisson brackets.
//
// Sign convention (important): hamiltonian_vector_field is oriented so that
// in canonical coordinates the flow of h obeys dq/dt = dh/dp and
// dp/dt = -dh/dq.  Consequently {f,g} = X_f . grad g satisfies
// {h,tau} = d tau/dt along the h-flow.  This is the NEGATIVE of the common
// textbook bracket df/dq.dg/dp - df/dp.dg/dq; with the textbook sign the
// free-particle clock q/p would satisfy {h,q/p} = -1 instead of +1.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tempo/errors.hpp"
#include "tempo/types.hpp"

namespace tempo::geometry {

using DomainPredicate = std::function<bool(const Vec&)>;
using Evaluator = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;

// A 2n-dimensional chart with an open-set membership predicate.  The
// predicate must be open-set-like: if it holds at x it should hold in a
// small ball around x (validated by sampling, not by construction).
class PhaseSpace {
 public:
  PhaseSpace(int dim, std::vector<std::string> coordinate_names,
             DomainPredicate domain);

  // Canonical names q1..qn, p1..pn and an all-of-R^2n domain.
  explicit PhaseSpace(int dim);

  int dim() const { return dim_; }
  const std::vector<std::string>& coordinate_names() const { return names_; }
  bool contains(const Vec& x) const;
  void require_inside(const Vec& x) const;  // throws DomainError

 private:
  int dim_;
  std::vector<std::string> names_;
  DomainPredicate domain_;
};

enum class GradientMode { ClosedForm, FiniteDifference };

// A real function on phase space.  Carries either a closed-form gradient or
// a central finite-difference policy (step per coordinate:
// cbrt(machine eps) * max(1, |x_i|), one-sided with half step when the
// stencil would leave the domain).
class ScalarField {
 public:
  // Finite-difference gradient.
  ScalarField(Evaluator evaluator, std::string label = "");
  // Closed-form gradient.
  ScalarField(Evaluator evaluator, GradientFn grad, std::string label = "");

  double operator()(const Vec& x) const { return eval_(x); }
  GradientMode gradient_mode() const { return mode_; }
  const std::string& label() const { return label_; }

  // Gradient with the FD stencil constrained to the given domain.
  Vec gradient(const Vec& x, const PhaseSpace& space) const;
  // Gradient with an unconstrained stencil.
  Vec gradient(const Vec& x) const;

 private:
  Evaluator eval_;
  GradientFn grad_;
  GradientMode mode_;
  std::string label_;
};

// Constant antisymmetric invertible matrix in the chart coordinates.  The
// inverse is computed once and verified to 1e-12.  Canonical layout pairs
// q_i = x_i with p_i = x_{n+i}.
class SymplecticForm {
 public:
  static SymplecticForm canonical(int dim);
  // Canonical block scaled by a positive constant (used by the projective
  // chart, whose pulled-back form is twice the canonical one in the
  // convention where the flow of <F> matches exp(-isF)).
  static SymplecticForm scaled_canonical(int dim, double scale);
  static SymplecticForm from_matrix(const Mat& matrix);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Mat& matrix() const { return matrix_; }
  const Mat& inverse() const { return inverse_; }

  // Nonzero iff the matrix is exactly scale * canonical block form; enables
  // the exact pairwise bracket path.
  double canonical_scale() const { return canonical_scale_; }

 private:
  SymplecticForm(Mat matrix, double canonical_scale);

  Mat matrix_;
  Mat inverse_;
  // Field matrix S with X_f = S grad f; equals (inverse of matrix)^T, which
  // for the canonical form is the canonical block itself.
  Mat field_matrix_;
  double canonical_scale_;

  friend Vec apply_field_matrix(const SymplecticForm&, const Vec&);
};

// The triple (phase space, symplectic form, Hamiltonian).
class DynamicalSystem {
 public:
  DynamicalSystem(PhaseSpace space, SymplecticForm form, ScalarField h);

  const PhaseSpace& space() const { return space_; }
  const SymplecticForm& form() const { return form_; }
  const ScalarField& hamiltonian() const { return h_; }

 private:
  PhaseSpace space_;
  SymplecticForm form_;
  ScalarField h_;
};

// S grad, the raw field-matrix application X_f = S grad f (S = inverse
// transpose of the form matrix); used by the integrator's right-hand sides.
Vec apply_field_matrix(const SymplecticForm& form, const Vec& grad);

// d_a f at x; DomainError if x (or an unavoidable FD stencil point) lies
// outside the domain.
Vec gradient(const ScalarField& field, const Vec& x, const PhaseSpace& space);

// F^a at x for the generator `field`, oriented as documented above.
Vec hamiltonian_vector_field(const DynamicalSystem& system,
                             const ScalarField& field, const Vec& x);

// {f,g}(x) = X_f . grad g.  On (scaled) canonical forms this uses the exact
// pairwise formula, so {f,f} = 0 and antisymmetry hold exactly.
double poisson_bracket(const DynamicalSystem& system, const ScalarField& f,
                       const ScalarField& g, const Vec& x);

// True iff |X_h(x)| <= tol.
bool is_stationary(const DynamicalSystem& system, const Vec& x, double tol);

}  // namespace tempo::geometry
