#include "tempo/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tempo::flow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
// 5th-order weights (also the last stage row).
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
// 5th-order minus 4th-order weights (error estimator).
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

struct StepResult {
  Vec y5;    // 5th-order solution
  Vec err;   // y5 - y4
  bool finite = false;
};

// One Dormand-Prince attempt with signed step h; f0 = rhs(y).
StepResult dp_attempt(const std::function<Vec(const Vec&)>& rhs, const Vec& y,
                      const Vec& f0, double h) {
  StepResult r;
  const Vec k1 = f0;
  const Vec k2 = rhs(y + h * (kA21 * k1));
  const Vec k3 = rhs(y + h * (kA31 * k1 + kA32 * k2));
  const Vec k4 = rhs(y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
  const Vec k5 = rhs(y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
  const Vec k6 =
      rhs(y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
  r.y5 = y + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
  const Vec k7 = rhs(r.y5);
  r.err = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
  r.finite = r.y5.allFinite() && r.err.allFinite();
  return r;
}

double error_norm(const Vec& err, const Vec& y_old, const Vec& y_new,
                  double abs_tol, double rel_tol) {
  double sum = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc =
        abs_tol + rel_tol * std::max(std::abs(y_old[i]), std::abs(y_new[i]));
    const double q = err[i] / sc;
    sum += q * q;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

double initial_step(const Vec& y0, const Vec& f0, double abs_tol, double rel_tol,
                    double total) {
  auto scaled_norm = [&](const Vec& v) {
    double sum = 0.0;
    for (int i = 0; i < v.size(); ++i) {
      const double sc = abs_tol + rel_tol * std::abs(y0[i]);
      const double q = v[i] / sc;
      sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(v.size()));
  };
  const double d0 = scaled_norm(y0);
  const double d1 = scaled_norm(f0);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  return std::min(h0, total);
}

double underflow_floor(double t) { return 1e3 * kEps * std::max(1.0, std::abs(t)); }

// Cubic Hermite basis evaluation on [t0, t0+h].
Vec hermite(double theta, double h, const Vec& y0, const Vec& f0, const Vec& y1,
            const Vec& f1) {
  const double t2 = theta * theta, t3 = t2 * theta;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0 +
         (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1;
}

bool state_good(const OdeSystem& ode, const Vec& y, double blowup_norm) {
  if (!y.allFinite() || y.norm() >= blowup_norm) return false;
  return !ode.in_domain || ode.in_domain(y);
}

Verdict classify_bad(const OdeSystem& ode, const Vec& y) {
  if (!y.allFinite()) return Verdict::Blowup;
  if (ode.in_domain && !ode.in_domain(y)) return Verdict::LeftDomain;
  return Verdict::Blowup;
}

std::pair<double, double> ordered(double a, double b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

// Driver state shared by both methods: accepted samples plus bookkeeping.
struct Recorder {
  Trajectory traj;
  long stride;
  long accepted = 0;

  explicit Recorder(const std::string& tag, long store_stride)
      : stride(store_stride) {
    traj.generator_tag = tag;
  }
  void record(double t, const Vec& y, const Vec& f, bool force = false) {
    if (!force && stride > 1 && accepted % stride != 0) {
      ++accepted;
      return;
    }
    ++accepted;
    traj.parameter_samples.push_back(t);
    traj.states.push_back(y);
    traj.derivatives.push_back(f);
  }
};

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
    throw ConfigError("integrator tolerances must be positive");
  if (max_step < 0.0) throw ConfigError("max_step must be >= 0");
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (!(blowup_norm > 1.0)) throw ConfigError("blowup_norm must exceed 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(bracket_tol > 0.0)) throw ConfigError("bracket_tol must be positive");
  if (!(fixed_step > 0.0)) throw ConfigError("fixed_step must be positive");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Completed: return "Completed";
    case Verdict::LeftDomain: return "LeftDomain";
    case Verdict::Blowup: return "Blowup";
    case Verdict::StepUnderflow: return "StepUnderflow";
    case Verdict::MaxSteps: return "MaxSteps";
  }
  return "?";
}

Vec Trajectory::at(double t) const {
  const auto& ts = parameter_samples;
  if (ts.empty()) throw Error("empty trajectory");
  const double dir = ts.size() > 1 && ts.back() < ts.front() ? -1.0 : 1.0;
  const double u = dir * t;
  if (u < dir * ts.front() - 1e-12 || u > dir * ts.back() + 1e-12)
    throw Error("interpolation parameter outside the sampled range");
  if (ts.size() == 1) return states.front();
  // First segment whose far end is at or past t (binary search on the
  // direction-normalized parameters).
  std::size_t k = 1, hi_k = ts.size() - 1;
  while (k < hi_k) {
    const std::size_t mid = (k + hi_k) / 2;
    if (dir * ts[mid] < u)
      k = mid + 1;
    else
      hi_k = mid;
  }
  const double h = ts[k] - ts[k - 1];
  const double theta = std::clamp((t - ts[k - 1]) / h, 0.0, 1.0);
  return hermite(theta, h, states[k - 1], derivatives[k - 1], states[k],
                 derivatives[k]);
}

Vec rk45_step(const std::function<Vec(const Vec&)>& rhs, const Vec& y, double h) {
  return dp_attempt(rhs, y, rhs(y), h).y5;
}

namespace {

// Locate the escape parameter inside an accepted-but-bad step by bisecting
// the step size of a single Runge-Kutta step from (t, y): lo always maps to
// a good state, hi to a bad one.  Returns (lo, hi) as step offsets; appends
// the last good interior point to the recorder.
std::pair<double, double> refine_escape_rk(const OdeSystem& ode, Recorder& rec,
                                           const Vec& y, const Vec& f, double t,
                                           double dir, double h_bad,
                                           const IntegratorConfig& config,
                                           Verdict& verdict_out) {
  double lo = 0.0, hi = h_bad;
  Vec bad_state;  // state at hi, for verdict classification
  {
    StepResult probe = dp_attempt(ode.rhs, y, f, dir * hi);
    bad_state = probe.finite ? probe.y5 : Vec();
  }
  Vec good_state = y;
  while (hi - lo > config.bracket_tol) {
    const double mid = 0.5 * (lo + hi);
    StepResult probe = dp_attempt(ode.rhs, y, f, dir * mid);
    if (probe.finite && state_good(ode, probe.y5, config.blowup_norm)) {
      lo = mid;
      good_state = probe.y5;
    } else {
      hi = mid;
      bad_state = probe.finite ? probe.y5 : Vec();
    }
  }
  if (lo > 0.0) {
    Vec yg = good_state;
    if (ode.snap) ode.snap(yg);
    const Vec fg = ode.rhs(yg);
    if (fg.allFinite()) rec.record(t + dir * lo, yg, fg, /*force=*/true);
  }
  verdict_out = bad_state.size() == 0 ? Verdict::Blowup : classify_bad(ode, bad_state);
  return {lo, hi};
}

std::pair<Trajectory, FlowOutcome> run_adaptive(const OdeSystem& ode, const Vec& y0,
                                                std::pair<double, double> span,
                                                const IntegratorConfig& config,
                                                const std::string& tag,
                                                long store_stride) {
  Recorder rec(tag, store_stride);
  FlowOutcome outcome;

  double t = span.first;
  Vec y = y0;
  Vec f = ode.rhs(y);
  if (!f.allFinite()) throw DomainError("vector field is not finite at the initial state");
  rec.record(t, y, f, /*force=*/true);
  if (span.second == span.first) return {std::move(rec.traj), outcome};

  const double dir = span.second > span.first ? 1.0 : -1.0;
  const double total = std::abs(span.second - span.first);
  double h = initial_step(y, f, config.abs_tol, config.rel_tol, total);
  if (config.max_step > 0.0) h = std::min(h, config.max_step);

  for (long step = 0; step < config.max_steps; ++step) {
    const double remaining = std::abs(span.second - t);
    bool last = false;
    double h_use = h;
    if (config.max_step > 0.0) h_use = std::min(h_use, config.max_step);
    if (h_use >= remaining) {
      h_use = remaining;
      last = true;
    }
    if (h_use < underflow_floor(t)) {
      outcome.verdict = Verdict::StepUnderflow;
      outcome.escape_bracket = ordered(t, t + dir * config.bracket_tol);
      return {std::move(rec.traj), outcome};
    }

    StepResult attempt = dp_attempt(ode.rhs, y, f, dir * h_use);
    if (!attempt.finite) {
      h = 0.5 * h_use;
      continue;
    }
    const double err =
        error_norm(attempt.err, y, attempt.y5, config.abs_tol, config.rel_tol);
    if (err > 1.0) {
      h = h_use * std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    if (!state_good(ode, attempt.y5, config.blowup_norm)) {
      Verdict verdict = Verdict::Blowup;
      const auto [lo, hi] =
          refine_escape_rk(ode, rec, y, f, t, dir, h_use, config, verdict);
      outcome.verdict = verdict;
      outcome.escape_bracket = ordered(t + dir * lo, t + dir * hi);
      return {std::move(rec.traj), outcome};
    }

    t = last ? span.second : t + dir * h_use;
    y = attempt.y5;
    if (ode.snap) ode.snap(y);
    f = ode.rhs(y);
    if (!f.allFinite()) {
      // The state is good but the field is not evaluable; treat as blow-up
      // at this parameter.
      outcome.verdict = Verdict::Blowup;
      outcome.escape_bracket = ordered(t, t + dir * config.bracket_tol);
      return {std::move(rec.traj), outcome};
    }
    rec.record(t, y, f, last);
    if (last) return {std::move(rec.traj), outcome};

    const double grow =
        err < 1e-30 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h = h_use * grow;
  }
  outcome.verdict = Verdict::MaxSteps;
  return {std::move(rec.traj), outcome};
}

// Fixed-point solve of the implicit midpoint step y1 = y0 + h f((y0+y1)/2).
// Returns an empty Vec when the iteration does not converge or leaves the
// finite range.
Vec midpoint_solve(const std::function<Vec(const Vec&)>& rhs, const Vec& y,
                   double h_signed) {
  Vec z = y + h_signed * rhs(y);
  if (!z.allFinite()) return {};
  for (int it = 0; it < 100; ++it) {
    const Vec mid = 0.5 * (y + z);
    const Vec fz = rhs(mid);
    if (!fz.allFinite()) return {};
    Vec next = y + h_signed * fz;
    const double delta = (next - z).norm();
    z = std::move(next);
    if (delta <= 1e-14 * (1.0 + z.norm())) return z;
  }
  return {};
}

std::pair<Trajectory, FlowOutcome> run_midpoint(const OdeSystem& ode, const Vec& y0,
                                                std::pair<double, double> span,
                                                const IntegratorConfig& config,
                                                const std::string& tag,
                                                long store_stride) {
  Recorder rec(tag, store_stride);
  FlowOutcome outcome;

  double t = span.first;
  Vec y = y0;
  Vec f = ode.rhs(y);
  rec.record(t, y, f, /*force=*/true);
  if (span.second == span.first) return {std::move(rec.traj), outcome};

  const double dir = span.second > span.first ? 1.0 : -1.0;
  for (long step = 0; step < config.max_steps; ++step) {
    const double remaining = std::abs(span.second - t);
    const bool last = config.fixed_step >= remaining;
    const double h_use = last ? remaining : config.fixed_step;

    Vec y_new = midpoint_solve(ode.rhs, y, dir * h_use);
    const bool good =
        y_new.size() > 0 && state_good(ode, y_new, config.blowup_norm);
    if (!good) {
      // Bisect the step size; probes are midpoint solves from y.
      double lo = 0.0, hi = h_use;
      Vec bad_state = y_new;
      while (hi - lo > config.bracket_tol) {
        const double mid_h = 0.5 * (lo + hi);
        Vec probe = midpoint_solve(ode.rhs, y, dir * mid_h);
        if (probe.size() > 0 && state_good(ode, probe, config.blowup_norm)) {
          lo = mid_h;
        } else {
          hi = mid_h;
          bad_state = std::move(probe);
        }
      }
      outcome.verdict = bad_state.size() == 0 ? Verdict::Blowup
                                              : classify_bad(ode, bad_state);
      outcome.escape_bracket = ordered(t + dir * lo, t + dir * hi);
      return {std::move(rec.traj), outcome};
    }

    t = last ? span.second : t + dir * h_use;
    y = std::move(y_new);
    if (ode.snap) ode.snap(y);
    f = ode.rhs(y);
    rec.record(t, y, f, last);
    if (last) return {std::move(rec.traj), outcome};
  }
  outcome.verdict = Verdict::MaxSteps;
  return {std::move(rec.traj), outcome};
}

std::pair<Trajectory, FlowOutcome> integrate_ode_impl(const OdeSystem& ode,
                                                      const Vec& y0,
                                                      std::pair<double, double> span,
                                                      const IntegratorConfig& config,
                                                      const std::string& tag,
                                                      long store_stride) {
  config.validate();
  if (static_cast<int>(y0.size()) != ode.dim)
    throw DimensionMismatch("initial state dimension does not match the ODE");
  if (!std::isfinite(span.first) || !std::isfinite(span.second))
    throw ConfigError("integration span must be finite");
  if (!state_good(ode, y0, config.blowup_norm))
    throw DomainError("initial state is outside the domain (or beyond the blow-up norm)");
  if (config.method == IntegratorConfig::Method::ImplicitMidpoint)
    return run_midpoint(ode, y0, span, config, tag, store_stride);
  return run_adaptive(ode, y0, span, config, tag, store_stride);
}

}  // namespace

std::pair<Trajectory, FlowOutcome> integrate_ode(const OdeSystem& ode, const Vec& y0,
                                                 std::pair<double, double> span,
                                                 const IntegratorConfig& config,
                                                 const std::string& tag) {
  // Long fixed-step scans would otherwise store millions of nodes; thin the
  // stored samples while keeping first/last exact.
  long stride = 1;
  if (config.method == IntegratorConfig::Method::ImplicitMidpoint) {
    const double steps = std::abs(span.second - span.first) / config.fixed_step;
    if (steps > 200000.0) stride = static_cast<long>(steps / 200000.0) + 1;
  }
  return integrate_ode_impl(ode, y0, span, config, tag, stride);
}

OdeSystem hamiltonian_ode(const geometry::DynamicalSystem& system,
                          const geometry::ScalarField& generator) {
  OdeSystem ode;
  ode.dim = system.space().dim();
  ode.rhs = [&system, &generator](const Vec& x) {
    return geometry::apply_field_matrix(system.form(), generator.gradient(x));
  };
  ode.in_domain = [&system](const Vec& x) { return system.space().contains(x); };
  return ode;
}

std::pair<Trajectory, FlowOutcome> integrate(const geometry::DynamicalSystem& system,
                                             const geometry::ScalarField& generator,
                                             const Vec& x0,
                                             std::pair<double, double> span,
                                             const IntegratorConfig& config) {
  system.space().require_inside(x0);
  return integrate_ode(hamiltonian_ode(system, generator), x0, span, config,
                       generator.label());
}

SampledFlow integrate_sampled_ode(const OdeSystem& ode, const Vec& y0,
                                  const std::vector<double>& grid,
                                  const IntegratorConfig& config) {
  if (grid.empty() || grid.front() != 0.0)
    throw ConfigError("sample grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if ((grid[i] - grid[i - 1]) * (grid[1] - grid[0]) <= 0.0 ||
        grid[i] == grid[i - 1])
      throw ConfigError("sample grid must be strictly monotone");
  }
  SampledFlow out;
  out.parameters.push_back(0.0);
  out.states.push_back(y0);
  Vec y = y0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    auto [traj, oc] = integrate_ode(ode, y, {grid[i - 1], grid[i]}, config);
    if (oc.verdict != Verdict::Completed) {
      out.outcome = oc;
      return out;
    }
    y = traj.back_state();
    out.parameters.push_back(grid[i]);
    out.states.push_back(y);
  }
  return out;
}

SampledFlow integrate_sampled(const geometry::DynamicalSystem& system,
                              const geometry::ScalarField& generator, const Vec& x0,
                              const std::vector<double>& grid,
                              const IntegratorConfig& config) {
  system.space().require_inside(x0);
  return integrate_sampled_ode(hamiltonian_ode(system, generator), x0, grid, config);
}

std::optional<double> escape_time(const geometry::DynamicalSystem& system,
                                  const geometry::ScalarField& generator,
                                  const Vec& x0, const IntegratorConfig& config) {
  auto probe = [&](double sign) -> std::optional<double> {
    auto [traj, oc] =
        integrate(system, generator, x0, {0.0, sign * config.horizon}, config);
    if (oc.escape_bracket)
      return 0.5 * (oc.escape_bracket->first + oc.escape_bracket->second);
    return std::nullopt;
  };
  const auto fwd = probe(1.0);
  const auto bwd = probe(-1.0);
  if (fwd && bwd) return std::abs(*fwd) <= std::abs(*bwd) ? fwd : bwd;
  return fwd ? fwd : bwd;
}

Section Section::through(const geometry::DynamicalSystem& system,
                         const geometry::ScalarField& generator,
                         geometry::ScalarField level, Vec anchor) {
  system.space().require_inside(anchor);
  if (std::abs(level(anchor)) > 1e-10)
    throw ConfigError("section anchor does not lie on the level set");
  const Vec grad = level.gradient(anchor, system.space());
  const Vec field = geometry::hamiltonian_vector_field(system, generator, anchor);
  const double trans = std::abs(grad.dot(field));
  if (trans <= 1e-8)
    throw ConfigError("flow is tangent to the section at the anchor");
  return Section{std::move(level), std::move(anchor), trans};
}

namespace {

struct CrossingCandidate {
  double t_lo, t_hi;  // bracket in absolute parameter (lo on the x0 side)
  int segment;        // index of the trajectory segment containing it
};

// Directional derivative of the level along the generator's field.
double level_rate(const geometry::DynamicalSystem& system,
                  const geometry::ScalarField& generator,
                  const geometry::ScalarField& level, const Vec& x) {
  const Vec grad = level.gradient(x, system.space());
  const Vec field = geometry::hamiltonian_vector_field(system, generator, x);
  return grad.dot(field);
}

}  // namespace

std::pair<double, Vec> first_crossing(const geometry::DynamicalSystem& system,
                                      const geometry::ScalarField& generator,
                                      const Vec& x0, const Section& section,
                                      Direction direction,
                                      const IntegratorConfig& config,
                                      bool include_initial) {
  system.space().require_inside(x0);
  const double s0 = section.level(x0);
  if (include_initial && std::abs(s0) <= 1e-10) {
    if (std::abs(level_rate(system, generator, section.level, x0)) < 1e-8)
      throw TangentialCrossing("flow is tangent to the section at the initial state");
    return {0.0, x0};
  }

  const double dir = direction == Direction::Forward ? 1.0 : -1.0;
  auto [traj, oc] =
      integrate(system, generator, x0, {0.0, dir * config.horizon}, config);

  // Scan nodes and interpolated interior points for the first sign change.
  constexpr int kInterior = 8;
  double prev_t = traj.parameter_samples[0];
  double prev_s = s0;
  std::optional<std::pair<double, double>> bracket;  // (t before, t after)
  std::optional<double> node_hit;
  for (int k = 1; k < traj.size() && !bracket && !node_hit; ++k) {
    const double ta = traj.parameter_samples[k - 1];
    const double tb = traj.parameter_samples[k];
    for (int j = 1; j <= kInterior + 1; ++j) {
      const double tj =
          j <= kInterior ? ta + (tb - ta) * j / (kInterior + 1.0) : tb;
      const double sj =
          section.level(j <= kInterior ? traj.at(tj) : traj.states[k]);
      if (std::abs(sj) <= 1e-10 && tj != 0.0) {
        node_hit = tj;
        break;
      }
      if (prev_s * sj < 0.0 && std::abs(prev_s) > 1e-10) {
        bracket = std::make_pair(prev_t, tj);
        break;
      }
      prev_t = tj;
      prev_s = sj;
    }
  }

  if (!bracket && !node_hit) {
    throw NoCrossing("no section crossing before " +
                     std::string(oc.verdict == Verdict::Completed
                                     ? "the horizon"
                                     : "flow escape (" + to_string(oc.verdict) + ")"));
  }

  // Interpolant bisection, then Newton polish against exactly integrated
  // states (each evaluation integrates from x0 to the trial parameter on the
  // exact-hit path, so no interpolation error enters the final answer).
  double t_est;
  if (node_hit) {
    t_est = *node_hit;
  } else {
    double a = bracket->first, b = bracket->second;
    double sa = section.level(traj.at(a));
    for (int it = 0; it < 60 && std::abs(b - a) > 1e-14 * std::max(1.0, std::abs(a));
         ++it) {
      const double m = 0.5 * (a + b);
      const double sm = section.level(traj.at(m));
      if (sa * sm <= 0.0) {
        b = m;
      } else {
        a = m;
        sa = sm;
      }
    }
    t_est = 0.5 * (a + b);
  }

  auto exact_state = [&](double t) {
    if (t == 0.0) return x0;
    auto sampled = integrate_sampled(system, generator, x0, {0.0, t}, config);
    if (sampled.outcome.verdict != Verdict::Completed)
      throw NoCrossing("flow escaped while refining the crossing");
    return sampled.states.back();
  };

  double t_c = t_est;
  Vec x_c = exact_state(t_c);
  double s_c = section.level(x_c);
  for (int it = 0; it < 12 && std::abs(s_c) > 1e-10; ++it) {
    const double rate = level_rate(system, generator, section.level, x_c);
    if (std::abs(rate) < 1e-12) break;
    t_c -= s_c / rate;
    x_c = exact_state(t_c);
    s_c = section.level(x_c);
  }
  if (std::abs(s_c) > 1e-10)
    throw TangentialCrossing("crossing refinement stalled (level " +
                             std::to_string(s_c) + ")");
  if (std::abs(level_rate(system, generator, section.level, x_c)) < 1e-8)
    throw TangentialCrossing("flow is tangent to the section at the crossing");
  return {t_c, x_c};
}

double drift_along(const geometry::ScalarField& field, const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw Error("empty trajectory");
  const double f0 = field(trajectory.states.front());
  double drift = 0.0;
  for (const Vec& x : trajectory.states)
    drift = std::max(drift, std::abs(field(x) - f0));
  return drift;
}

}  // namespace tempo::flow
