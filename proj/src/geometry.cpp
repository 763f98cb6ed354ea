#include "tempo/geometry.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace tempo::geometry {

namespace {

const double kFdStep = std::cbrt(std::numeric_limits<double>::epsilon());

std::vector<std::string> default_names(int dim) {
  const int n = dim / 2;
  std::vector<std::string> names;
  names.reserve(dim);
  for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
  return names;
}

}  // namespace

PhaseSpace::PhaseSpace(int dim, std::vector<std::string> coordinate_names,
                       DomainPredicate domain)
    : dim_(dim), names_(std::move(coordinate_names)), domain_(std::move(domain)) {
  if (dim_ < 2 || dim_ % 2 != 0)
    throw ConfigError("phase space dimension must be even and >= 2");
  if (static_cast<int>(names_.size()) != dim_)
    throw ConfigError("expected " + std::to_string(dim_) +
                      " coordinate names, got " + std::to_string(names_.size()));
  if (!domain_) domain_ = [](const Vec&) { return true; };
}

PhaseSpace::PhaseSpace(int dim) : PhaseSpace(dim, default_names(dim), nullptr) {}

bool PhaseSpace::contains(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  return domain_(x);
}

void PhaseSpace::require_inside(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw DimensionMismatch("state has dimension " + std::to_string(x.size()) +
                            ", phase space has " + std::to_string(dim_));
  if (!domain_(x)) throw DomainError("state lies outside the phase-space domain");
}

ScalarField::ScalarField(Evaluator evaluator, std::string label)
    : eval_(std::move(evaluator)),
      mode_(GradientMode::FiniteDifference),
      label_(std::move(label)) {
  if (!eval_) throw ConfigError("scalar field needs an evaluator");
}

ScalarField::ScalarField(Evaluator evaluator, GradientFn grad, std::string label)
    : eval_(std::move(evaluator)),
      grad_(std::move(grad)),
      mode_(GradientMode::ClosedForm),
      label_(std::move(label)) {
  if (!eval_) throw ConfigError("scalar field needs an evaluator");
  if (!grad_) throw ConfigError("closed-form scalar field needs a gradient");
}

namespace {

// Central difference, falling back to a second-order one-sided stencil with
// half step when x +- h e_i leaves the domain.  Shrinks further if even the
// one-sided stencil cannot be placed.
double fd_partial(const Evaluator& f, const Vec& x, int i, double step,
                  const DomainPredicate& inside) {
  Vec xp = x, xm = x;
  for (int attempt = 0; attempt < 30; ++attempt) {
    const double h = step / (1 << attempt);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const bool plus_ok = inside(xp);
    const bool minus_ok = inside(xm);
    if (plus_ok && minus_ok) return (f(xp) - f(xm)) / (2.0 * h);
    const double k = h / 2.0;
    if (plus_ok) {
      Vec x1 = x, x2 = x;
      x1[i] = x[i] + k;
      x2[i] = x[i] + 2.0 * k;
      if (inside(x2)) return (-3.0 * f(x) + 4.0 * f(x1) - f(x2)) / (2.0 * k);
    } else if (minus_ok) {
      Vec x1 = x, x2 = x;
      x1[i] = x[i] - k;
      x2[i] = x[i] - 2.0 * k;
      if (inside(x2)) return (3.0 * f(x) - 4.0 * f(x1) + f(x2)) / (2.0 * k);
    }
  }
  throw DomainError("finite-difference stencil cannot be placed inside the domain");
}

Vec fd_gradient(const Evaluator& f, const Vec& x, const DomainPredicate& inside) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double step = kFdStep * std::max(1.0, std::abs(x[i]));
    g[i] = fd_partial(f, x, i, step, inside);
  }
  return g;
}

}  // namespace

Vec ScalarField::gradient(const Vec& x, const PhaseSpace& space) const {
  space.require_inside(x);
  if (mode_ == GradientMode::ClosedForm) return grad_(x);
  return fd_gradient(eval_, x, [&space](const Vec& y) { return space.contains(y); });
}

Vec ScalarField::gradient(const Vec& x) const {
  if (mode_ == GradientMode::ClosedForm) return grad_(x);
  return fd_gradient(eval_, x, [](const Vec&) { return true; });
}

SymplecticForm::SymplecticForm(Mat matrix, double canonical_scale)
    : matrix_(std::move(matrix)), canonical_scale_(canonical_scale) {
  const int d = static_cast<int>(matrix_.rows());
  if (d < 2 || d % 2 != 0 || matrix_.cols() != d)
    throw ConfigError("symplectic form must be a square matrix of even dimension");
  if (!(matrix_ + matrix_.transpose()).isZero(0.0))
    throw ConfigError("symplectic form must be exactly antisymmetric");
  if (canonical_scale_ != 0.0) {
    // Closed form: (c J)^-1 = -J / c for the canonical block J.
    inverse_ = -matrix_ / (canonical_scale_ * canonical_scale_);
  } else {
    Eigen::FullPivLU<Mat> lu(matrix_);
    if (!lu.isInvertible()) throw ConfigError("symplectic form is singular");
    inverse_ = lu.inverse();
  }
  if ((matrix_ * inverse_ - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("symplectic form inverse failed verification");
  field_matrix_ = inverse_.transpose();
}

SymplecticForm SymplecticForm::canonical(int dim) {
  return scaled_canonical(dim, 1.0);
}

SymplecticForm SymplecticForm::scaled_canonical(int dim, double scale) {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("symplectic form dimension must be even and >= 2");
  if (!(scale > 0.0)) throw ConfigError("canonical scale must be positive");
  const int n = dim / 2;
  Mat m = Mat::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    m(i, n + i) = scale;
    m(n + i, i) = -scale;
  }
  return SymplecticForm(std::move(m), scale);
}

SymplecticForm SymplecticForm::from_matrix(const Mat& matrix) {
  const int d = static_cast<int>(matrix.rows());
  // Detect an exactly scaled canonical block so the pairwise bracket applies.
  double scale = 0.0;
  if (d >= 2 && d % 2 == 0 && matrix.cols() == d) {
    const int n = d / 2;
    scale = matrix(0, n);
    if (scale > 0.0) {
      Mat expect = Mat::Zero(d, d);
      for (int i = 0; i < n; ++i) {
        expect(i, n + i) = scale;
        expect(n + i, i) = -scale;
      }
      if (!(matrix - expect).isZero(0.0)) scale = 0.0;
    } else {
      scale = 0.0;
    }
  }
  return SymplecticForm(matrix, scale);
}

Vec apply_field_matrix(const SymplecticForm& form, const Vec& grad) {
  if (form.canonical_scale_ != 0.0) {
    // S = J / scale: (dq, dp) -> (dp, -dq) / scale without forming S.
    const int n = static_cast<int>(grad.size()) / 2;
    Vec out(grad.size());
    out.head(n) = grad.tail(n) / form.canonical_scale_;
    out.tail(n) = -grad.head(n) / form.canonical_scale_;
    return out;
  }
  return form.field_matrix_ * grad;
}

DynamicalSystem::DynamicalSystem(PhaseSpace space, SymplecticForm form,
                                 ScalarField h)
    : space_(std::move(space)), form_(std::move(form)), h_(std::move(h)) {
  if (space_.dim() != form_.dim())
    throw DimensionMismatch("symplectic form dimension " +
                            std::to_string(form_.dim()) +
                            " does not match phase space dimension " +
                            std::to_string(space_.dim()));
}

Vec gradient(const ScalarField& field, const Vec& x, const PhaseSpace& space) {
  return field.gradient(x, space);
}

Vec hamiltonian_vector_field(const DynamicalSystem& system,
                             const ScalarField& field, const Vec& x) {
  return apply_field_matrix(system.form(), field.gradient(x, system.space()));
}

double poisson_bracket(const DynamicalSystem& system, const ScalarField& f,
                       const ScalarField& g, const Vec& x) {
  const Vec df = f.gradient(x, system.space());
  const Vec dg = g.gradient(x, system.space());
  const double scale = system.form().canonical_scale();
  if (scale != 0.0) {
    // Pairwise form: each term df/dp_i * dg/dq_i - df/dq_i * dg/dp_i cancels
    // exactly when f == g, so {f,f} = 0 and antisymmetry are exact.
    const int n = system.space().dim() / 2;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      sum += df[n + i] * dg[i] - df[i] * dg[n + i];
    return sum / scale;
  }
  return apply_field_matrix(system.form(), df).dot(dg);
}

bool is_stationary(const DynamicalSystem& system, const Vec& x, double tol) {
  return hamiltonian_vector_field(system, system.hamiltonian(), x).norm() <= tol;
}

}  // namespace tempo::geometry
