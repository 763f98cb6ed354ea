#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "tempo/errors.hpp"
#include "tempo/expr.hpp"
#include "tempo/flow.hpp"
#include "tempo/geometry.hpp"

using namespace tempo;
using flow::IntegratorConfig;
using flow::Verdict;
using geometry::DynamicalSystem;
using geometry::PhaseSpace;
using geometry::ScalarField;
using geometry::SymplecticForm;

namespace {

// Libration period of h = p^2/2 - cos q started at rest from q0 = pi/3:
// T = 4 K(sin(q0/2)) with K the complete elliptic integral of the first
// kind; frozen from std::comp_ellint_1(0.5).
constexpr double kPendulumPeriod = 6.7430014192503844;
constexpr double kQ0 = 1.0471975511965976;  // pi / 3

Vec state(double q, double p) {
  Vec x(2);
  x << q, p;
  return x;
}

ScalarField field_of(const std::string& text) {
  return expr::Expression::parse(text, {"q", "p"}).as_field(text);
}

DynamicalSystem pendulum() {
  return DynamicalSystem(PhaseSpace(2), SymplecticForm::canonical(2),
                         field_of("p^2 / 2 - cos(q)"));
}

DynamicalSystem free_particle() {
  auto domain = [](const Vec& x) { return x[1] > 0.0; };
  return DynamicalSystem(PhaseSpace(2, {"q", "p"}, domain),
                         SymplecticForm::canonical(2), field_of("p^2 / 2"));
}

DynamicalSystem norton() {
  return DynamicalSystem(PhaseSpace(2), SymplecticForm::canonical(2),
                         field_of("exp(p)"));
}

}  // namespace

TEST_CASE("pendulum returns to its start after one elliptic-integral period") {
  const auto sys = pendulum();
  const Vec x0 = state(kQ0, 0);
  IntegratorConfig cfg;
  const auto [trajectory, outcome] =
      flow::integrate(sys, sys.hamiltonian(), x0, {0.0, kPendulumPeriod}, cfg);
  REQUIRE(outcome.verdict == Verdict::Completed);
  CHECK((trajectory.back_state() - x0).norm() <= 1e-6);

  SUBCASE("and reversing the span undoes the flow") {
    const auto [back, back_outcome] = flow::integrate(
        sys, sys.hamiltonian(), trajectory.back_state(), {kPendulumPeriod, 0.0}, cfg);
    REQUIRE(back_outcome.verdict == Verdict::Completed);
    CHECK((back.back_state() - x0).norm() <= 1e-7);
  }

  SUBCASE("and energy is conserved along the way") {
    CHECK(flow::drift_along(sys.hamiltonian(), trajectory) <= 1e-9);
  }
}

TEST_CASE("free-particle tau-flow leaves the half-plane at s = h(x0)") {
  const auto sys = free_particle();
  const auto tau = field_of("q / p");
  const auto [trajectory, outcome] =
      flow::integrate(sys, tau, state(0, 1), {0.0, 2.0}, IntegratorConfig{});
  // The boundary p = 0 is gradient-singular for q/p, so error control stalls
  // the stepper just short of it rather than ever accepting an out-of-domain
  // state: the verdict is StepUnderflow, with the bracket pinned to the
  // stall parameter.
  CHECK(outcome.verdict == Verdict::StepUnderflow);
  REQUIRE(outcome.escape_bracket.has_value());
  const auto [lo, hi] = *outcome.escape_bracket;
  CHECK(std::abs(0.5 * (lo + hi) - 0.5) <= 1e-5);
  CHECK(hi - lo <= 1.1e-6);

  SUBCASE("escape_time reports the bracket midpoint") {
    const auto s = flow::escape_time(sys, tau, state(0, 1), IntegratorConfig{});
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(0.5).epsilon(1e-5));
  }
}

TEST_CASE("exponential-wall tau-flow stalls at s = e^{p0} for several starts") {
  const auto sys = norton();
  const auto tau = field_of("q * exp(-p)");
  for (double p0 : {-1.0, 0.0, 1.0}) {
    const auto s = flow::escape_time(sys, tau, state(0.3, p0), IntegratorConfig{});
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(std::exp(p0)).epsilon(1e-3));
  }
}

TEST_CASE("h-flow of the exponential wall runs forever (completes the horizon)") {
  const auto sys = norton();
  const auto s = flow::escape_time(sys, sys.hamiltonian(), state(0, 0),
                                   IntegratorConfig{});
  CHECK_FALSE(s.has_value());
}

TEST_CASE("blow-up is detected and bracketed") {
  const DynamicalSystem sys(PhaseSpace(2), SymplecticForm::canonical(2),
                            field_of("p^2 / 2 - q^4 / 4"));
  const auto [trajectory, outcome] =
      flow::integrate(sys, sys.hamiltonian(), state(2, 0), {0.0, 50.0},
                      IntegratorConfig{});
  CHECK((outcome.verdict == Verdict::Blowup ||
         outcome.verdict == Verdict::StepUnderflow));
  REQUIRE(outcome.escape_bracket.has_value());
  CHECK(outcome.escape_bracket->second <= 50.0);
}

TEST_CASE("max_steps aborts runaway integrations") {
  const auto sys = pendulum();
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  const auto [trajectory, outcome] =
      flow::integrate(sys, sys.hamiltonian(), state(1, 0), {0.0, 100.0}, cfg);
  CHECK(outcome.verdict == Verdict::MaxSteps);
}

TEST_CASE("dense output interpolates the oscillator to interpolation accuracy") {
  const DynamicalSystem ho(PhaseSpace(2), SymplecticForm::canonical(2),
                           field_of("(q^2 + p^2) / 2"));
  const auto [trajectory, outcome] =
      flow::integrate(ho, ho.hamiltonian(), state(0, 1), {0.0, 6.0},
                      IntegratorConfig{});
  REQUIRE(outcome.verdict == Verdict::Completed);
  for (double t : {0.37, 1.91, 3.333, 5.5}) {
    const Vec y = trajectory.at(t);
    CHECK(y[0] == doctest::Approx(std::sin(t)).epsilon(1e-5));
    CHECK(y[1] == doctest::Approx(std::cos(t)).epsilon(1e-5));
  }
}

TEST_CASE("sampled integration hits every grid node exactly") {
  const auto sys = pendulum();
  const std::vector<double> grid = {0.0, 0.1, 0.25, 1.0, 2.5};
  const auto sampled = flow::integrate_sampled(sys, sys.hamiltonian(), state(1, 0),
                                               grid, IntegratorConfig{});
  REQUIRE(sampled.outcome.verdict == Verdict::Completed);
  REQUIRE(sampled.parameters == grid);  // bitwise: nodes are span endpoints
  REQUIRE(sampled.states.size() == grid.size());
  CHECK((sampled.states[0] - state(1, 0)).norm() == 0.0);
}

TEST_CASE("sampled integration covers the reachable prefix before an escape") {
  const auto sys = free_particle();
  const auto tau = field_of("q / p");
  const std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.8};
  const auto sampled =
      flow::integrate_sampled(sys, tau, state(0, 1), grid, IntegratorConfig{});
  CHECK(sampled.outcome.verdict == Verdict::StepUnderflow);
  CHECK(sampled.parameters == std::vector<double>{0.0, 0.2, 0.4});
}

TEST_CASE("one fixed Dormand-Prince step is 5th order on the pendulum") {
  const auto sys = pendulum();
  const auto rhs = [&sys](const Vec& y) {
    return geometry::hamiltonian_vector_field(sys, sys.hamiltonian(), y);
  };
  // Reference endpoint at machine-tight adaptive tolerance.
  IntegratorConfig tight;
  tight.rel_tol = 1e-13;
  tight.abs_tol = 1e-14;
  const Vec x0 = state(1.0, 0.3);
  const double T = 1.0;
  const auto [reference, outcome] =
      flow::integrate(sys, sys.hamiltonian(), x0, {0.0, T}, tight);
  REQUIRE(outcome.verdict == Verdict::Completed);

  auto endpoint_error = [&](int steps) {
    Vec y = x0;
    const double h = T / steps;
    for (int i = 0; i < steps; ++i) y = flow::rk45_step(rhs, y, h);
    return (y - reference.back_state()).norm();
  };
  const double e8 = endpoint_error(8);
  const double e16 = endpoint_error(16);
  const double order = std::log2(e8 / e16);
  CHECK(order >= 4.0);
  CHECK(order <= 6.5);
}

TEST_CASE("implicit midpoint keeps pendulum energy bounded over a long run") {
  const auto sys = pendulum();
  IntegratorConfig cfg;
  cfg.method = IntegratorConfig::Method::ImplicitMidpoint;
  cfg.fixed_step = 1e-2;
  const auto [trajectory, outcome] =
      flow::integrate(sys, sys.hamiltonian(), state(1, 0), {0.0, 50.0}, cfg);
  REQUIRE(outcome.verdict == Verdict::Completed);
  // Second-order symplectic scheme: O(step^2) oscillation, no secular growth.
  CHECK(flow::drift_along(sys.hamiltonian(), trajectory) <= 1e-3);
  const double end_drift =
      std::abs(sys.hamiltonian()(trajectory.back_state()) -
               sys.hamiltonian()(trajectory.front_state()));
  CHECK(end_drift <= 1e-3);
}

TEST_CASE("transversal sections and first crossings on the oscillator") {
  const DynamicalSystem ho(PhaseSpace(2), SymplecticForm::canonical(2),
                           field_of("(q^2 + p^2) / 2"));
  const auto section = flow::Section::through(ho, ho.hamiltonian(), field_of("q"),
                                              state(0, -1));
  CHECK(section.transversality == doctest::Approx(1.0));

  SUBCASE("from off the section: first hit at t = pi/2") {
    const auto [t, y] = flow::first_crossing(ho, ho.hamiltonian(), state(1, 0),
                                             section, flow::Direction::Forward,
                                             IntegratorConfig{});
    CHECK(t == doctest::Approx(3.141592653589793 / 2).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-8));
  }

  SUBCASE("from on the section: include_initial switches the answer") {
    const auto [t0, y0] = flow::first_crossing(ho, ho.hamiltonian(), state(0, 1),
                                               section, flow::Direction::Forward,
                                               IntegratorConfig{}, true);
    CHECK(t0 == 0.0);
    CHECK((y0 - state(0, 1)).norm() == 0.0);
    const auto [t1, y1] = flow::first_crossing(ho, ho.hamiltonian(), state(0, 1),
                                               section, flow::Direction::Forward,
                                               IntegratorConfig{}, false);
    CHECK(t1 == doctest::Approx(3.141592653589793).epsilon(1e-9));
  }

  SUBCASE("a generator tangent to the section is rejected") {
    // The q-flow (generator q) moves only p, staying inside {q = 0}.
    CHECK_THROWS_AS(flow::Section::through(ho, field_of("q"), field_of("q"),
                                           state(0, -1)),
                    ConfigError);
  }
}

TEST_CASE("integrator configuration is validated") {
  IntegratorConfig cfg;
  cfg.rel_tol = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  IntegratorConfig cfg2;
  cfg2.fixed_step = 0;
  CHECK_THROWS_AS(cfg2.validate(), ConfigError);
  IntegratorConfig cfg3;
  cfg3.horizon = 0;
  CHECK_THROWS_AS(cfg3.validate(), ConfigError);
}
