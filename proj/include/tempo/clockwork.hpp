#pragma once

// Time-observable verification: timeliness along integrated flows, the
// differential version {h,tau} = 1, constructive local clocks on transversal
// sections with Monte Carlo validation, uniqueness-by-decomposition of pairs
// of clocks, the energy-descent law h(s) = h(0) - s along a clock's own
// flow, escape certificates for clock flows over half-bounded Hamiltonians,
// and near-return (recurrence) detection.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempo/flow.hpp"
#include "tempo/geometry.hpp"
#include "tempo/types.hpp"

namespace tempo::clockwork {

struct CandidateObservable {
  geometry::ScalarField tau;
  std::string label;
};

// ---------------------------------------------------------------------------
// Timeliness on a finite grid: tau(c_t) = tau(c_0) + t along the h-flow.

struct TimelinessRow {
  Vec initial_state;
  double max_deviation = 0.0;  // over the covered grid nodes
  flow::FlowOutcome outcome;   // Completed iff the whole grid was covered
  int covered_nodes = 0;
  int requested_nodes = 0;
};

struct TimelinessReport {
  std::vector<TimelinessRow> per_trajectory;
  bool pass = false;  // all deviations <= tolerance AND all flows completed
  double tolerance = 0.0;
};

// t_grid must be strictly increasing and contain 0 (the flow is integrated
// in both directions from each start as needed).  Escapes are reported, not
// thrown: the row keeps the deviation on the surviving sub-grid.
TimelinessReport verify_timeliness(const geometry::DynamicalSystem& system,
                                   const CandidateObservable& candidate,
                                   const std::vector<Vec>& initial_states,
                                   const std::vector<double>& t_grid, double tol,
                                   const flow::IntegratorConfig& config = {});

// ---------------------------------------------------------------------------
// Local timeliness: {h, tau} = 1 pointwise.

struct LocalTimelinessRow {
  Vec state;
  double bracket_value = 0.0;
};

struct LocalTimelinessReport {
  std::vector<LocalTimelinessRow> samples;
  double max_deviation = 0.0;  // max |{h,tau} - 1|
  bool pass = false;
  double tolerance = 0.0;
};

LocalTimelinessReport verify_local_timeliness(const geometry::DynamicalSystem& system,
                                              const CandidateObservable& candidate,
                                              const std::vector<Vec>& sample_states,
                                              double tol);

// ---------------------------------------------------------------------------
// Local clocks (constructive): flow time from a transversal section.

struct ClockConfig {
  int validation_samples = 200;  // ball points checked for a unique crossing
  int validation_pairs = 50;     // two-point identity checks
  int max_shrinks = 10;          // radius halvings before giving up
  double tol = 1e-6;             // two-point identity tolerance
  std::uint64_t seed = 0;
  flow::IntegratorConfig integrator = {};
};

struct ClockValidation {
  int samples_checked = 0;
  int pairs_checked = 0;
  double max_pair_residual = 0.0;  // |tau(c_t) - tau(c_t') - (t - t')|
  int shrinks = 0;
};

struct LocalClock {
  geometry::DynamicalSystem system;
  flow::Section section;
  double radius = 0.0;      // validated ball radius around the anchor
  double time_bound = 0.0;  // integration horizon for in-ball crossings
  ClockValidation validation;
};

// Builds the section through x with Euclidean normal X_h(x) and validates a
// ball radius (shrinking geometrically on failure) by sampling: every sample
// must reach the section by a unique transversal crossing that stays near
// the ball, and sampled same-trajectory pairs must satisfy the two-point
// identity tau(c_t) - tau(c_t') = t - t'.  Throws StationaryPoint when
// |X_h(x)| <= 1e-8 and ValidationFailed when no radius down to
// requested/2^max_shrinks validates.
LocalClock construct_local_clock(const geometry::DynamicalSystem& system,
                                 const Vec& x, double requested_radius,
                                 const ClockConfig& config = {});

// Signed flow time from the section to y (positive downstream of the
// section).  Throws OutsideBall when |y - anchor| > radius and NoCrossing
// when no crossing is found within the clock's time bound.
double clock_value(const LocalClock& clock, const Vec& y,
                   const flow::IntegratorConfig& config = {});

// ---------------------------------------------------------------------------
// Uniqueness: the difference of two timely functions is a constant of motion.

struct UniquenessRow {
  Vec initial_state;
  double drift = 0.0;  // max |f(c_t) - f(c_0)|, f = tau2 - tau1
  flow::FlowOutcome outcome;
};

struct UniquenessReport {
  std::vector<UniquenessRow> per_trajectory;
  bool pass = false;
  double tolerance = 0.0;
};

UniquenessReport uniqueness_decomposition(const geometry::DynamicalSystem& system,
                                          const CandidateObservable& tau1,
                                          const CandidateObservable& tau2,
                                          const std::vector<Vec>& initial_states,
                                          const std::vector<double>& t_grid,
                                          double tol,
                                          const flow::IntegratorConfig& config = {});

// ---------------------------------------------------------------------------
// Energy descent along a clock's own flow: h(c_s) = h(c_0) - s.

struct EnergyDescentReport {
  Vec initial_state;
  double max_deviation = 0.0;  // max |h(c_s) - h(c_0) + s| over covered grid
  double slope = 0.0;          // least-squares slope of h(c_s) vs s
  double max_residual = 0.0;   // max |h_i - fit_i| of that regression
  flow::FlowOutcome outcome;
  int covered_nodes = 0;
  int requested_nodes = 0;
  bool pass = false;
  double tolerance = 0.0;
};

// s_grid must be strictly increasing from 0.  The pass verdict concerns the
// covered grid prefix; an early escape is recorded in `outcome`, not failed.
EnergyDescentReport energy_descent_check(const geometry::DynamicalSystem& system,
                                         const CandidateObservable& candidate,
                                         const Vec& x0,
                                         const std::vector<double>& s_grid,
                                         double tol,
                                         const flow::IntegratorConfig& config = {});

// ---------------------------------------------------------------------------
// Incompleteness certificate: the tau-flow must escape by h(x0) - h_inf.

struct IncompletenessSample {
  Vec initial_state;
  flow::FlowOutcome outcome;
  double predicted_bound = 0.0;  // h(x0) - h_inf
  double escape_midpoint = 0.0;  // defined when an escape bracket exists
  bool escaped_within_bound = false;
};

struct IncompletenessCertificate {
  std::vector<IncompletenessSample> samples;
  double h_inf = 0.0;  // caller-asserted infimum of h (recorded, not checked)
  double local_timeliness_deviation = 0.0;
  bool pass = false;          // every sampled flow escaped within its bound
  double bound_margin = 0.0;  // slack added to the predicted bound
};

// Gate: the candidate must pass verify_local_timeliness on the samples at
// local_tol, else PreconditionUnverified.  The forward tau-flow from each
// sample must then escape no later than h(x0) - h_inf + bound_margin.
IncompletenessCertificate incompleteness_certificate(
    const geometry::DynamicalSystem& system, const CandidateObservable& candidate,
    const std::vector<Vec>& sample_states, double h_inf,
    const flow::IntegratorConfig& config = {}, double local_tol = 1e-6,
    double bound_margin = 1e-3);

// ---------------------------------------------------------------------------
// Recurrence obstruction: near-returns forbid timely functions on the orbit.

struct RecurrenceResult {
  double T = 0.0;         // first near-return parameter
  double distance = 0.0;  // |c_T - x0| at the located minimum
};

// Integrates the h-flow to the horizon and returns the first T greater than
// t_min (10x the first accepted step) where |c_T - x0| <= eps, locating T by
// minimizing the distance over the bracketing step.  Absent when no such
// near-return occurs before the horizon (or before escape).
std::optional<RecurrenceResult> recurrence_obstruction(
    const geometry::DynamicalSystem& system, const Vec& x0, double horizon,
    double eps, const flow::IntegratorConfig& config = {});

}  // namespace tempo::clockwork
