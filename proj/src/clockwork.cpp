#include "tempo/clockwork.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "tempo/rng.hpp"

namespace tempo::clockwork {

namespace {

void require_grid_with_zero(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("parameter grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw ConfigError("parameter grid must be strictly increasing");
  if (std::none_of(grid.begin(), grid.end(), [](double t) { return t == 0.0; }))
    throw ConfigError("parameter grid must contain 0");
}

// Splits a grid containing 0 into a backward part (0, negatives descending)
// and a forward part (0, positives ascending), each ready for
// integrate_sampled.
std::pair<std::vector<double>, std::vector<double>> split_grid(
    const std::vector<double>& grid) {
  std::vector<double> backward{0.0}, forward{0.0};
  for (auto it = grid.rbegin(); it != grid.rend(); ++it)
    if (*it < 0.0) backward.push_back(*it);
  for (double t : grid)
    if (t > 0.0) forward.push_back(t);
  return {std::move(backward), std::move(forward)};
}

}  // namespace

TimelinessReport verify_timeliness(const geometry::DynamicalSystem& system,
                                   const CandidateObservable& candidate,
                                   const std::vector<Vec>& initial_states,
                                   const std::vector<double>& t_grid, double tol,
                                   const flow::IntegratorConfig& config) {
  require_grid_with_zero(t_grid);
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  auto [backward, forward] = split_grid(t_grid);

  TimelinessReport report;
  report.tolerance = tol;
  report.pass = true;
  for (const Vec& x0 : initial_states) {
    TimelinessRow row;
    row.initial_state = x0;
    row.requested_nodes = static_cast<int>(t_grid.size());
    row.covered_nodes = 1;  // the node t = 0
    const double tau0 = candidate.tau(x0);

    bool completed = true;
    for (const auto* part : {&backward, &forward}) {
      if (part->size() < 2) continue;
      auto sampled =
          flow::integrate_sampled(system, system.hamiltonian(), x0, *part, config);
      for (std::size_t i = 1; i < sampled.states.size(); ++i) {
        const double t = sampled.parameters[i];
        row.max_deviation = std::max(
            row.max_deviation,
            std::abs(candidate.tau(sampled.states[i]) - tau0 - t));
      }
      row.covered_nodes += static_cast<int>(sampled.states.size()) - 1;
      if (sampled.outcome.verdict != flow::Verdict::Completed) {
        completed = false;
        row.outcome = sampled.outcome;
      }
    }
    if (completed) row.outcome = flow::FlowOutcome{};
    if (!completed || row.max_deviation > tol) report.pass = false;
    report.per_trajectory.push_back(std::move(row));
  }
  return report;
}

LocalTimelinessReport verify_local_timeliness(const geometry::DynamicalSystem& system,
                                              const CandidateObservable& candidate,
                                              const std::vector<Vec>& sample_states,
                                              double tol) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  LocalTimelinessReport report;
  report.tolerance = tol;
  for (const Vec& x : sample_states) {
    const double v =
        geometry::poisson_bracket(system, system.hamiltonian(), candidate.tau, x);
    report.max_deviation = std::max(report.max_deviation, std::abs(v - 1.0));
    report.samples.push_back({x, v});
  }
  report.pass = report.max_deviation <= tol;
  return report;
}

namespace {

// A section crossing counts for clock purposes only if its state stays near
// the validated ball (the level set is a global hyperplane; far-away
// crossings of the same plane belong to other passes of the orbit).
constexpr double kBallSlack = 2.0;

struct CrossingProbe {
  bool found = false;
  double t = 0.0;
  Vec state;
};

CrossingProbe in_ball_crossing(const geometry::DynamicalSystem& system,
                               const LocalClock& clock, const Vec& y,
                               flow::Direction direction, bool include_initial,
                               const flow::IntegratorConfig& config) {
  CrossingProbe probe;
  try {
    auto [t, state] = flow::first_crossing(system, system.hamiltonian(), y,
                                           clock.section, direction, config,
                                           include_initial);
    if ((state - clock.section.anchor).norm() <= kBallSlack * clock.radius) {
      probe.found = true;
      probe.t = t;
      probe.state = std::move(state);
    }
  } catch (const NoCrossing&) {
  }
  return probe;
}

// Signed flow time from the section to y; empty optional when no in-ball
// crossing exists within the time bound.  `unique_check` additionally
// requires that only one direction yields an in-ball crossing (used during
// validation; a nearby second crossing means the radius is too large).
std::optional<double> clock_time(const LocalClock& clock, const Vec& y,
                                 const flow::IntegratorConfig& base_config,
                                 bool unique_check, bool* unique_ok = nullptr) {
  flow::IntegratorConfig config = base_config;
  config.horizon = clock.time_bound;
  if (std::abs(clock.section.level(y)) <= 1e-10) {
    if (unique_ok) *unique_ok = true;
    return 0.0;
  }
  const auto back = in_ball_crossing(clock.system, clock, y,
                                     flow::Direction::Backward, false, config);
  const auto fwd = in_ball_crossing(clock.system, clock, y,
                                    flow::Direction::Forward, false, config);
  if (unique_ok) *unique_ok = !(back.found && fwd.found);
  if (unique_check && back.found && fwd.found) return std::nullopt;
  if (back.found) return -back.t;
  if (fwd.found) return -fwd.t;
  return std::nullopt;
}

}  // namespace

LocalClock construct_local_clock(const geometry::DynamicalSystem& system,
                                 const Vec& x, double requested_radius,
                                 const ClockConfig& config) {
  system.space().require_inside(x);
  if (!(requested_radius > 0.0)) throw ConfigError("radius must be positive");
  const Vec field_at_anchor =
      geometry::hamiltonian_vector_field(system, system.hamiltonian(), x);
  if (field_at_anchor.norm() <= 1e-8)
    throw StationaryPoint("the Hamiltonian vector field vanishes at the anchor");

  // Affine level (y - x) . H(x): zero at x, constant gradient H(x), maximal
  // transversality among hyperplanes through x.
  const Vec anchor = x;
  const Vec normal = field_at_anchor;
  geometry::ScalarField level(
      [anchor, normal](const Vec& y) { return (y - anchor).dot(normal); },
      [normal](const Vec&) { return normal; }, "clock-section");
  flow::Section section =
      flow::Section::through(system, system.hamiltonian(), level, anchor);

  double radius = requested_radius;
  for (int shrink = 0; shrink <= config.max_shrinks; ++shrink, radius *= 0.5) {
    Rng rng(config.seed + static_cast<std::uint64_t>(shrink));
    LocalClock clock{system, section, radius, 0.0, {}};
    clock.validation.shrinks = shrink;

    // Sample ball points; all must be inside the domain with the field
    // bounded away from zero, else this radius fails outright.
    std::vector<Vec> points;
    points.reserve(config.validation_samples);
    double min_speed = std::numeric_limits<double>::infinity();
    bool radius_ok = true;
    for (int i = 0; i < config.validation_samples && radius_ok; ++i) {
      Vec y = rng.in_ball(anchor, radius);
      if (!system.space().contains(y)) {
        radius_ok = false;
        break;
      }
      const double speed =
          geometry::hamiltonian_vector_field(system, system.hamiltonian(), y).norm();
      if (speed <= 1e-8) {
        radius_ok = false;
        break;
      }
      min_speed = std::min(min_speed, speed);
      points.push_back(std::move(y));
    }
    if (!radius_ok) continue;
    clock.time_bound = 20.0 * radius / min_speed;

    // Every sample must reach the section by one in-ball crossing.
    std::vector<double> tau_values;
    tau_values.reserve(points.size());
    for (const Vec& y : points) {
      bool unique = true;
      std::optional<double> tau;
      try {
        tau = clock_time(clock, y, config.integrator, /*unique_check=*/true,
                         &unique);
      } catch (const TangentialCrossing&) {
        radius_ok = false;
        break;
      }
      if (!tau || !unique) {
        radius_ok = false;
        break;
      }
      tau_values.push_back(*tau);
      ++clock.validation.samples_checked;
    }
    if (!radius_ok) continue;

    // Two-point identity on same-trajectory pairs inside the ball.
    for (int k = 0; k < config.validation_pairs && radius_ok; ++k) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform() * points.size());
      const Vec& a = points[j];
      const double speed =
          geometry::hamiltonian_vector_field(system, system.hamiltonian(), a).norm();
      // Offset bounded away from zero so the sampled pair is distinct.
      double dt = (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                  (0.1 + 0.4 * rng.uniform()) * radius / speed;
      Vec b;
      bool placed = false;
      for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
        auto sampled = flow::integrate_sampled(system, system.hamiltonian(), a,
                                               {0.0, dt}, config.integrator);
        if (sampled.outcome.verdict == flow::Verdict::Completed) {
          const Vec& candidate_b = sampled.states.back();
          if ((candidate_b - anchor).norm() <= radius &&
              system.space().contains(candidate_b)) {
            b = candidate_b;
            placed = true;
            break;
          }
        }
        dt *= 0.5;
      }
      if (!placed) continue;  // pair could not be placed; not a failure
      std::optional<double> tau_a, tau_b;
      try {
        tau_a = clock_time(clock, a, config.integrator, true);
        tau_b = clock_time(clock, b, config.integrator, true);
      } catch (const TangentialCrossing&) {
        radius_ok = false;
        break;
      }
      if (!tau_a || !tau_b) {
        radius_ok = false;
        break;
      }
      const double residual = std::abs(*tau_b - *tau_a - dt);
      ++clock.validation.pairs_checked;
      clock.validation.max_pair_residual =
          std::max(clock.validation.max_pair_residual, residual);
      if (residual > config.tol) radius_ok = false;
    }
    if (radius_ok) return clock;
  }
  throw ValidationFailed("no ball radius down to requested/2^" +
                         std::to_string(config.max_shrinks) +
                         " validated the clock at this point");
}

double clock_value(const LocalClock& clock, const Vec& y,
                   const flow::IntegratorConfig& config) {
  clock.system.space().require_inside(y);
  if ((y - clock.section.anchor).norm() > clock.radius)
    throw OutsideBall("query point lies outside the clock's validated ball");
  const auto tau = clock_time(clock, y, config, /*unique_check=*/false);
  if (!tau)
    throw NoCrossing("no section crossing within the clock's time bound");
  return *tau;
}

UniquenessReport uniqueness_decomposition(const geometry::DynamicalSystem& system,
                                          const CandidateObservable& tau1,
                                          const CandidateObservable& tau2,
                                          const std::vector<Vec>& initial_states,
                                          const std::vector<double>& t_grid,
                                          double tol,
                                          const flow::IntegratorConfig& config) {
  require_grid_with_zero(t_grid);
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  auto [backward, forward] = split_grid(t_grid);

  UniquenessReport report;
  report.tolerance = tol;
  report.pass = true;
  for (const Vec& x0 : initial_states) {
    UniquenessRow row;
    row.initial_state = x0;
    const double f0 = tau2.tau(x0) - tau1.tau(x0);
    bool completed = true;
    for (const auto* part : {&backward, &forward}) {
      if (part->size() < 2) continue;
      auto sampled =
          flow::integrate_sampled(system, system.hamiltonian(), x0, *part, config);
      for (std::size_t i = 1; i < sampled.states.size(); ++i) {
        const double f = tau2.tau(sampled.states[i]) - tau1.tau(sampled.states[i]);
        row.drift = std::max(row.drift, std::abs(f - f0));
      }
      if (sampled.outcome.verdict != flow::Verdict::Completed) {
        completed = false;
        row.outcome = sampled.outcome;
      }
    }
    if (completed) row.outcome = flow::FlowOutcome{};
    if (!completed || row.drift > tol) report.pass = false;
    report.per_trajectory.push_back(std::move(row));
  }
  return report;
}

EnergyDescentReport energy_descent_check(const geometry::DynamicalSystem& system,
                                         const CandidateObservable& candidate,
                                         const Vec& x0,
                                         const std::vector<double>& s_grid,
                                         double tol,
                                         const flow::IntegratorConfig& config) {
  if (s_grid.empty() || s_grid.front() != 0.0)
    throw ConfigError("s-grid must start at 0");
  for (std::size_t i = 1; i < s_grid.size(); ++i)
    if (s_grid[i] <= s_grid[i - 1])
      throw ConfigError("s-grid must be strictly increasing");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");

  EnergyDescentReport report;
  report.initial_state = x0;
  report.tolerance = tol;
  report.requested_nodes = static_cast<int>(s_grid.size());

  auto sampled = flow::integrate_sampled(system, candidate.tau, x0, s_grid, config);
  report.outcome = sampled.outcome;
  report.covered_nodes = static_cast<int>(sampled.states.size());

  const auto& h = system.hamiltonian();
  const double h0 = h(x0);
  std::vector<double> hs(sampled.states.size());
  for (std::size_t i = 0; i < sampled.states.size(); ++i) {
    hs[i] = h(sampled.states[i]);
    report.max_deviation =
        std::max(report.max_deviation,
                 std::abs(hs[i] - h0 + sampled.parameters[i]));
  }

  // Least-squares line h(s) = a + slope * s over the covered nodes.
  const std::size_t n = hs.size();
  if (n >= 2) {
    double sum_s = 0.0, sum_h = 0.0, sum_ss = 0.0, sum_sh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_s += sampled.parameters[i];
      sum_h += hs[i];
      sum_ss += sampled.parameters[i] * sampled.parameters[i];
      sum_sh += sampled.parameters[i] * hs[i];
    }
    const double denom = n * sum_ss - sum_s * sum_s;
    report.slope = (n * sum_sh - sum_s * sum_h) / denom;
    const double intercept = (sum_h - report.slope * sum_s) / n;
    for (std::size_t i = 0; i < n; ++i)
      report.max_residual =
          std::max(report.max_residual,
                   std::abs(hs[i] - (intercept + report.slope * sampled.parameters[i])));
  }
  report.pass = report.max_deviation <= tol;
  return report;
}

IncompletenessCertificate incompleteness_certificate(
    const geometry::DynamicalSystem& system, const CandidateObservable& candidate,
    const std::vector<Vec>& sample_states, double h_inf,
    const flow::IntegratorConfig& config, double local_tol, double bound_margin) {
  if (sample_states.empty()) throw ConfigError("certificate needs at least one sample");

  const auto local = verify_local_timeliness(system, candidate, sample_states, local_tol);
  if (!local.pass)
    throw PreconditionUnverified(
        "candidate is not locally timely at the samples (max |{h,tau}-1| = " +
        std::to_string(local.max_deviation) + ")");

  IncompletenessCertificate cert;
  cert.h_inf = h_inf;
  cert.local_timeliness_deviation = local.max_deviation;
  cert.bound_margin = bound_margin;
  cert.pass = true;
  for (const Vec& x0 : sample_states) {
    IncompletenessSample sample;
    sample.initial_state = x0;
    sample.predicted_bound = system.hamiltonian()(x0) - h_inf;
    auto [traj, oc] =
        flow::integrate(system, candidate.tau, x0, {0.0, config.horizon}, config);
    sample.outcome = oc;
    if (oc.escape_bracket) {
      sample.escape_midpoint =
          0.5 * (oc.escape_bracket->first + oc.escape_bracket->second);
      sample.escaped_within_bound =
          sample.escape_midpoint <= sample.predicted_bound + bound_margin;
    }
    if (!sample.escaped_within_bound) cert.pass = false;
    cert.samples.push_back(std::move(sample));
  }
  return cert;
}

std::optional<RecurrenceResult> recurrence_obstruction(
    const geometry::DynamicalSystem& system, const Vec& x0, double horizon,
    double eps, const flow::IntegratorConfig& base_config) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  system.space().require_inside(x0);

  // Cap the step so distance minima are bracketed by adjacent nodes.
  flow::IntegratorConfig config = base_config;
  config.horizon = horizon;
  if (config.max_step == 0.0) config.max_step = std::min(0.05, horizon / 100.0);

  auto [traj, oc] =
      flow::integrate(system, system.hamiltonian(), x0, {0.0, horizon}, config);
  if (traj.size() < 3) return std::nullopt;

  const double t_min = 10.0 * (traj.parameter_samples[1] - traj.parameter_samples[0]);
  auto radial_rate = [&](int k) {
    return (traj.states[k] - x0).dot(traj.derivatives[k]);
  };
  auto distance_at = [&](double t) { return (traj.at(t) - x0).norm(); };

  double prev_rate = radial_rate(0);
  for (int k = 1; k < traj.size(); ++k) {
    const double rate = radial_rate(k);
    const bool min_bracketed =
        (prev_rate < 0.0 && rate >= 0.0) || (prev_rate <= 0.0 && rate > 0.0);
    prev_rate = rate;
    if (!min_bracketed) continue;

    // Golden-section minimization of |c_t - x0| on the bracketing segment.
    const double kInvPhi = 0.6180339887498949;
    double a = traj.parameter_samples[k - 1], b = traj.parameter_samples[k];
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = distance_at(c), fd = distance_at(d);
    for (int it = 0; it < 80 && (b - a) > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = distance_at(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = distance_at(d);
      }
    }
    const double t_star = 0.5 * (a + b);
    const double dist = distance_at(t_star);
    if (t_star > t_min && dist <= eps) return RecurrenceResult{t_star, dist};
  }
  return std::nullopt;
}

}  // namespace tempo::clockwork
