#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "tempo/errors.hpp"
#include "tempo/expr.hpp"
#include "tempo/geometry.hpp"
#include "tempo/rng.hpp"

using namespace tempo;
using geometry::DynamicalSystem;
using geometry::PhaseSpace;
using geometry::ScalarField;
using geometry::SymplecticForm;

namespace {

Vec state(double q, double p) {
  Vec x(2);
  x << q, p;
  return x;
}

ScalarField field_of(const std::string& text,
                     const std::vector<std::string>& names = {"q", "p"}) {
  return expr::Expression::parse(text, names).as_field(text);
}

DynamicalSystem free_particle() {
  auto domain = [](const Vec& x) { return x[1] > 0.0; };
  return DynamicalSystem(PhaseSpace(2, {"q", "p"}, domain),
                         SymplecticForm::canonical(2), field_of("p^2 / 2"));
}

DynamicalSystem pendulum() {
  return DynamicalSystem(PhaseSpace(2), SymplecticForm::canonical(2),
                         field_of("p^2 / 2 - cos(q)"));
}

}  // namespace

TEST_CASE("hamiltonian vector field has the dq/dt = dh/dp orientation") {
  const auto sys = pendulum();
  const Vec x = state(1.0, 0.5);
  const Vec X = geometry::hamiltonian_vector_field(sys, sys.hamiltonian(), x);
  CHECK(X[0] == doctest::Approx(0.5).epsilon(1e-14));          // dq/dt = p
  CHECK(X[1] == doctest::Approx(-std::sin(1.0)).epsilon(1e-14));  // dp/dt = -sin q
}

TEST_CASE("bracket convention: {h, tau} is the rate of tau along the h-flow") {
  const auto sys = free_particle();
  const auto tau = field_of("q / p");
  // d(q/p)/dt = p/p = 1 for every admissible state: exact with symbolic
  // gradients on the canonical form.
  Rng rng(42);
  for (int i = 0; i < 25; ++i) {
    const Vec x = state(rng.uniform(-3, 3), rng.uniform(0.2, 5));
    CHECK(geometry::poisson_bracket(sys, sys.hamiltonian(), tau, x) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
  // {q, p} = -1 in this orientation (negative of the textbook bracket).
  CHECK(geometry::poisson_bracket(sys, field_of("q"), field_of("p"), state(0.3, 1)) ==
        doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("bracket antisymmetry and Leibniz rule hold on random fields") {
  const auto sys = pendulum();
  const auto f = field_of("q * p + sin(q)");
  const auto g = field_of("exp(p) * cos(q)");
  const auto k = field_of("p^2 - q");
  const auto gk = field_of("(exp(p) * cos(q)) * (p^2 - q)");
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Vec x = state(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double fg = geometry::poisson_bracket(sys, f, g, x);
    const double gf = geometry::poisson_bracket(sys, g, f, x);
    CHECK(fg == doctest::Approx(-gf).epsilon(1e-12));
    const double f_gk = geometry::poisson_bracket(sys, f, gk, x);
    const double leibniz = fg * k(x) + g(x) * geometry::poisson_bracket(sys, f, k, x);
    CHECK(f_gk == doctest::Approx(leibniz).epsilon(1e-10));
  }
}

TEST_CASE("scaled canonical form divides the bracket by the scale") {
  const DynamicalSystem sys(PhaseSpace(2), SymplecticForm::scaled_canonical(2, 2.0),
                            field_of("p^2 / 2"));
  const Vec x = state(0.4, 1.5);
  CHECK(geometry::poisson_bracket(sys, sys.hamiltonian(), field_of("q"), x) ==
        doctest::Approx(1.5 / 2.0).epsilon(1e-14));
}

TEST_CASE("finite-difference gradients agree with symbolic ones") {
  const auto symbolic = field_of("q * exp(-p) + sin(q * p)");
  const ScalarField numeric(
      [](const Vec& x) { return x[0] * std::exp(-x[1]) + std::sin(x[0] * x[1]); });
  CHECK(numeric.gradient_mode() == geometry::GradientMode::FiniteDifference);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vec x = state(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec gs = symbolic.gradient(x);
    const Vec gn = numeric.gradient(x);
    CHECK((gs - gn).norm() <= 1e-6 * std::max(1.0, gs.norm()));
  }
}

TEST_CASE("FD stencil respects the domain near its boundary") {
  const auto sys = free_particle();
  const ScalarField tau([](const Vec& x) { return x[0] / x[1]; });
  // p = 1e-7: a centred step of ~6e-6 would cross p = 0; the one-sided
  // fallback must keep every probe inside p > 0 and stay accurate in q.
  const Vec x = state(1.0, 1e-7);
  const Vec g = geometry::gradient(tau, x, sys.space());
  CHECK(g[0] == doctest::Approx(1.0 / 1e-7).epsilon(1e-4));
}

TEST_CASE("stationary points are detected") {
  const DynamicalSystem ho(PhaseSpace(2), SymplecticForm::canonical(2),
                           field_of("(q^2 + p^2) / 2"));
  CHECK(geometry::is_stationary(ho, state(0, 0), 1e-8));
  CHECK_FALSE(geometry::is_stationary(ho, state(1, 0), 1e-8));
}

TEST_CASE("phase space domain membership") {
  const auto sys = free_particle();
  CHECK(sys.space().contains(state(5, 0.1)));
  CHECK_FALSE(sys.space().contains(state(5, -0.1)));
  CHECK_THROWS_AS(sys.space().require_inside(state(0, -1)), DomainError);
}

TEST_CASE("symplectic form validates its matrix") {
  CHECK_THROWS_AS(SymplecticForm::canonical(3), ConfigError);  // odd dimension
  Mat singular = Mat::Zero(2, 2);
  CHECK_THROWS_AS(SymplecticForm::from_matrix(singular), ConfigError);
  Mat not_antisym(2, 2);
  not_antisym << 0, 1, 1, 0;
  CHECK_THROWS_AS(SymplecticForm::from_matrix(not_antisym), ConfigError);
}
