#pragma once

// Numerical integration of Hamiltonian vector fields: adaptive embedded
// Runge-Kutta 5(4) and fixed-step implicit midpoint, with domain-exit /
// blow-up / step-underflow detection (each reported with a bisection-refined
// escape bracket), cubic-Hermite dense output, and transversal section
// crossings.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tempo/errors.hpp"
#include "tempo/geometry.hpp"
#include "tempo/types.hpp"

namespace tempo::flow {

struct IntegratorConfig {
  enum class Method { AdaptiveRk, ImplicitMidpoint };

  Method method = Method::AdaptiveRk;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;   // 0 = no cap beyond the span itself
  long max_steps = 10'000'000;
  double blowup_norm = 1e8;
  double horizon = 100.0;  // max |parameter| probed by escape_time
  // Escape brackets are refined until t_hi - t_lo <= bracket_tol.
  double bracket_tol = 1e-6;
  // Step size for the implicit midpoint method.
  double fixed_step = 1e-3;

  void validate() const;  // throws ConfigError
};

enum class Verdict { Completed, LeftDomain, Blowup, StepUnderflow, MaxSteps };

std::string to_string(Verdict v);

struct FlowOutcome {
  Verdict verdict = Verdict::Completed;
  // Present iff verdict is LeftDomain, Blowup, or StepUnderflow; ordered
  // (lo, hi) with lo <= hi regardless of integration direction.
  std::optional<std::pair<double, double>> escape_bracket;
};

// Accepted integration nodes.  Samples are strictly monotone in the
// direction of integration (decreasing for backward spans).  Derivatives are
// the stored slopes used for cubic-Hermite dense output.
struct Trajectory {
  std::vector<double> parameter_samples;
  std::vector<Vec> states;
  std::vector<Vec> derivatives;
  std::string generator_tag;

  int size() const { return static_cast<int>(parameter_samples.size()); }
  const Vec& front_state() const { return states.front(); }
  const Vec& back_state() const { return states.back(); }
  // Cubic Hermite interpolation; t must lie within the sampled range.
  Vec at(double t) const;
};

// First-order ODE with optional domain membership and an optional per-step
// projection (used by the projective flow to renormalize representatives).
struct OdeSystem {
  int dim = 0;
  std::function<Vec(const Vec&)> rhs;
  std::function<bool(const Vec&)> in_domain;  // nullptr = everywhere
  std::function<void(Vec&)> snap;             // nullptr = none
};

// One fixed Dormand-Prince step from y (no adaptivity, no checks); returns
// the 5th-order solution.  Exposed for order-measurement tests.
Vec rk45_step(const std::function<Vec(const Vec&)>& rhs, const Vec& y, double h);

// Core driver on a raw ODE.
std::pair<Trajectory, FlowOutcome> integrate_ode(const OdeSystem& ode, const Vec& y0,
                                                 std::pair<double, double> span,
                                                 const IntegratorConfig& config,
                                                 const std::string& tag = "");

// The ODE of the generator's Hamiltonian vector field on the system's space.
// The returned closures reference `system` and `generator`, which must
// outlive the OdeSystem.  The right-hand side uses the unconstrained
// gradient: evaluators are expected to return (possibly non-finite) values
// off-domain rather than throw, so that trial stages near the boundary are
// rejected by the step controller instead of aborting the run.
OdeSystem hamiltonian_ode(const geometry::DynamicalSystem& system,
                          const geometry::ScalarField& generator);

// Advances the flow of the generator's Hamiltonian vector field from x0 over
// span = (t0, t1) (either direction).  Stops early with LeftDomain, Blowup,
// or StepUnderflow plus an escape bracket; Completed means t1 was reached.
std::pair<Trajectory, FlowOutcome> integrate(const geometry::DynamicalSystem& system,
                                             const geometry::ScalarField& generator,
                                             const Vec& x0,
                                             std::pair<double, double> span,
                                             const IntegratorConfig& config);

// Integration with exact hits at the requested parameter values: each grid
// node is the endpoint of a sub-span integration, never an interpolant.
// grid must be strictly monotone and start at 0 (where the state is x0).
// `states` covers the grid prefix reached before any escape.
struct SampledFlow {
  std::vector<double> parameters;  // covered prefix of the grid
  std::vector<Vec> states;
  FlowOutcome outcome;
};

SampledFlow integrate_sampled(const geometry::DynamicalSystem& system,
                              const geometry::ScalarField& generator, const Vec& x0,
                              const std::vector<double>& grid,
                              const IntegratorConfig& config);

SampledFlow integrate_sampled_ode(const OdeSystem& ode, const Vec& y0,
                                  const std::vector<double>& grid,
                                  const IntegratorConfig& config);

// Midpoint of the escape bracket if the flow fails before config.horizon in
// either direction (both probed; if both fail the earlier |t| wins).  Absent
// means both directions completed to the horizon — evidence of, not proof
// of, completeness.
std::optional<double> escape_time(const geometry::DynamicalSystem& system,
                                  const geometry::ScalarField& generator,
                                  const Vec& x0, const IntegratorConfig& config);

// Transversal hypersurface {level = 0} through an anchor point.
struct Section {
  geometry::ScalarField level;
  Vec anchor;
  double transversality;  // |d level . X_generator| at the anchor

  // Validates |level(anchor)| <= 1e-10 and transversality > 1e-8.
  static Section through(const geometry::DynamicalSystem& system,
                         const geometry::ScalarField& generator,
                         geometry::ScalarField level, Vec anchor);
};

enum class Direction { Forward, Backward };

// First parameter t* of the given sign with level(c_t) = 0, located by
// node/interpolant sign-change scanning, then bisection against exactly
// integrated states until |level| <= 1e-10.  With include_initial (default),
// an initial state already on the section (|level(x0)| <= 1e-10) returns
// (0, x0); pass false to ask for the next crossing instead.
// Throws NoCrossing if the horizon or an escape arrives first, and
// TangentialCrossing if |d level . field| < 1e-8 at the located crossing.
std::pair<double, Vec> first_crossing(const geometry::DynamicalSystem& system,
                                      const geometry::ScalarField& generator,
                                      const Vec& x0, const Section& section,
                                      Direction direction,
                                      const IntegratorConfig& config,
                                      bool include_initial = true);

// max over samples of |f(c_t) - f(c_0)|.
double drift_along(const geometry::ScalarField& field, const Trajectory& trajectory);

}  // namespace tempo::flow
