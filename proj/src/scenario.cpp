#include "tempo/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <utility>

#include "tempo/clockwork.hpp"
#include "tempo/errors.hpp"
#include "tempo/expr.hpp"
#include "tempo/geometry.hpp"
#include "tempo/kahler.hpp"
#include "tempo/rng.hpp"
#include "tempo/version.hpp"

namespace tempo::scenario {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON access helpers with located error messages.

[[noreturn]] void fail_config(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail_config(where, std::string("missing required key \"") + key + "\"");
  }
  return obj.at(key);
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) fail_config(where, "expected a number");
  return v.get<double>();
}

double get_double(const json& obj, const char* key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return as_double(obj.at(key), where + "." + key);
}

std::optional<double> get_optional_double(const json& obj, const char* key,
                                          const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  return as_double(obj.at(key), where + "." + key);
}

long get_long(const json& obj, const char* key, long fallback,
              const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail_config(where + "." + key, "expected an integer");
  return v.get<long>();
}

bool get_bool(const json& obj, const char* key, bool fallback,
              const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail_config(where + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail_config(where + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec parse_vec(const json& v, int dim, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    std::ostringstream os;
    os << "expected an array of " << dim << " numbers";
    fail_config(where, os.str());
  }
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = as_double(v.at(i), where);
  return x;
}

json vec_json(const Vec& x) {
  json a = json::array();
  for (int i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

json outcome_json(const flow::FlowOutcome& outcome) {
  json o;
  o["verdict"] = flow::to_string(outcome.verdict);
  if (outcome.escape_bracket) {
    o["escape_bracket"] = {outcome.escape_bracket->first,
                           outcome.escape_bracket->second};
  }
  return o;
}

// Grid spec: explicit strictly-increasing array, or {"from", "to", "nodes"}
// (inclusive endpoints).
std::vector<double> parse_grid(const json& spec, const std::string& where) {
  std::vector<double> grid;
  if (spec.is_array()) {
    if (spec.size() < 2) fail_config(where, "grid needs at least 2 nodes");
    for (const json& v : spec) grid.push_back(as_double(v, where));
  } else if (spec.is_object()) {
    const double from = as_double(require_key(spec, "from", where), where);
    const double to = as_double(require_key(spec, "to", where), where);
    const long nodes = get_long(spec, "nodes", 11, where);
    if (nodes < 2) fail_config(where, "grid needs at least 2 nodes");
    if (!(to > from)) fail_config(where, "grid requires to > from");
    for (long i = 0; i < nodes; ++i) {
      grid.push_back(from + (to - from) * static_cast<double>(i) /
                                static_cast<double>(nodes - 1));
    }
  } else {
    fail_config(where, "grid must be an array or {from, to, nodes}");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) fail_config(where, "grid must be strictly increasing");
  }
  return grid;
}

void require_zero_node(const std::vector<double>& grid, const std::string& where) {
  for (double g : grid) {
    if (g == 0.0) return;
  }
  fail_config(where, "grid must contain 0");
}

// State spec: explicit array of states, or {"count", "box"} sampled
// uniformly (deterministically from the check's RNG).
std::vector<Vec> parse_states(const json& spec, int dim, Rng& rng,
                              const std::string& where) {
  std::vector<Vec> states;
  if (spec.is_array()) {
    if (spec.empty()) fail_config(where, "needs at least one state");
    for (const json& s : spec) states.push_back(parse_vec(s, dim, where));
    return states;
  }
  if (!spec.is_object()) {
    fail_config(where, "states must be an array or {count, box}");
  }
  const long count = get_long(spec, "count", 1, where);
  if (count < 1) fail_config(where, "count must be positive");
  const json& box = require_key(spec, "box", where);
  if (!box.is_array() || static_cast<int>(box.size()) != dim) {
    fail_config(where, "box must list one [lo, hi] interval per coordinate");
  }
  std::vector<std::pair<double, double>> intervals;
  for (const json& iv : box) {
    if (!iv.is_array() || iv.size() != 2) fail_config(where, "box entries are [lo, hi]");
    const double lo = as_double(iv.at(0), where);
    const double hi = as_double(iv.at(1), where);
    if (!(hi > lo)) fail_config(where, "box entries need hi > lo");
    intervals.emplace_back(lo, hi);
  }
  for (long k = 0; k < count; ++k) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = rng.uniform(intervals[static_cast<std::size_t>(i)].first,
                         intervals[static_cast<std::size_t>(i)].second);
    }
    states.push_back(std::move(x));
  }
  return states;
}

// ---------------------------------------------------------------------------
// Execution context.

struct ClassicalContext {
  geometry::DynamicalSystem system;
  std::vector<std::string> coordinates;
};

struct Env {
  std::optional<ClassicalContext> classical;
  std::optional<kahler::QuantumSystem> quantum;
  flow::IntegratorConfig integrator;
  std::uint64_t seed = 0;
  std::optional<double> tol_override;
};

const ClassicalContext& need_classical(const Env& env, const std::string& where) {
  if (!env.classical) fail_config(where, "requires a classical system");
  return *env.classical;
}

const kahler::QuantumSystem& need_quantum(const Env& env, const std::string& where) {
  if (!env.quantum) fail_config(where, "requires a quantum system");
  return *env.quantum;
}

double headline_tol(const Env& env, const json& params, double fallback,
                    const std::string& where) {
  if (env.tol_override) return *env.tol_override;
  const double tol = get_double(params, "tol", fallback, where);
  if (!(tol > 0.0)) fail_config(where, "tol must be positive");
  return tol;
}

clockwork::CandidateObservable parse_candidate(const json& params, const char* key,
                                               const ClassicalContext& ctx,
                                               const std::string& where) {
  const json& v = require_key(params, key, where);
  if (!v.is_string()) fail_config(where + "." + key, "expected an expression string");
  const std::string text = v.get<std::string>();
  const expr::Expression expr = expr::Expression::parse(text, ctx.coordinates);
  return clockwork::CandidateObservable{expr.as_field(text), text};
}

flow::IntegratorConfig parse_integrator(const json& doc, const std::string& where) {
  flow::IntegratorConfig cfg;
  if (!doc.contains("integrator")) return cfg;
  const json& j = doc.at("integrator");
  if (!j.is_object()) fail_config(where, "integrator must be an object");
  const std::string method = get_string(j, "method", "adaptive_rk", where);
  if (method == "adaptive_rk") {
    cfg.method = flow::IntegratorConfig::Method::AdaptiveRk;
  } else if (method == "implicit_midpoint") {
    cfg.method = flow::IntegratorConfig::Method::ImplicitMidpoint;
  } else {
    fail_config(where, "integrator.method must be adaptive_rk or implicit_midpoint");
  }
  cfg.rel_tol = get_double(j, "rel_tol", cfg.rel_tol, where);
  cfg.abs_tol = get_double(j, "abs_tol", cfg.abs_tol, where);
  cfg.max_step = get_double(j, "max_step", cfg.max_step, where);
  cfg.max_steps = get_long(j, "max_steps", cfg.max_steps, where);
  cfg.blowup_norm = get_double(j, "blowup_norm", cfg.blowup_norm, where);
  cfg.horizon = get_double(j, "horizon", cfg.horizon, where);
  cfg.bracket_tol = get_double(j, "bracket_tol", cfg.bracket_tol, where);
  cfg.fixed_step = get_double(j, "fixed_step", cfg.fixed_step, where);
  cfg.validate();
  return cfg;
}

ClassicalContext parse_classical(const json& spec, const std::string& where) {
  const json& coords = require_key(spec, "coordinates", where);
  if (!coords.is_array() || coords.size() < 2 || coords.size() % 2 != 0) {
    fail_config(where, "coordinates must be an even-length array of names");
  }
  std::vector<std::string> names;
  for (const json& c : coords) {
    if (!c.is_string()) fail_config(where, "coordinate names must be strings");
    names.push_back(c.get<std::string>());
  }
  const int dim = static_cast<int>(names.size());

  const std::string h_text =
      require_key(spec, "hamiltonian", where).get<std::string>();
  const expr::Expression h_expr = expr::Expression::parse(h_text, names);

  geometry::PhaseSpace space = [&]() {
    if (!spec.contains("domain")) return geometry::PhaseSpace(dim, names, nullptr);
    const json& dom = spec.at("domain");
    if (!dom.is_array()) fail_config(where, "domain must be an array of expressions");
    std::vector<expr::Expression> constraints;
    for (const json& d : dom) {
      if (!d.is_string()) fail_config(where, "domain entries must be expression strings");
      constraints.push_back(expr::Expression::parse(d.get<std::string>(), names));
    }
    auto predicate = [constraints](const Vec& x) {
      for (const expr::Expression& g : constraints) {
        const double v = g.evaluate(x);
        if (!std::isfinite(v) || v <= 0.0) return false;
      }
      return true;
    };
    return geometry::PhaseSpace(dim, names, std::move(predicate));
  }();

  const double scale = get_double(spec, "scale", 1.0, where);
  if (scale == 0.0) fail_config(where, "scale must be nonzero");
  geometry::SymplecticForm form =
      scale == 1.0 ? geometry::SymplecticForm::canonical(dim)
                   : geometry::SymplecticForm::scaled_canonical(dim, scale);

  return ClassicalContext{
      geometry::DynamicalSystem(std::move(space), std::move(form),
                                h_expr.as_field("h")),
      names};
}

// ---------------------------------------------------------------------------
// Check handlers.  Prepared checks parse everything statically checkable up
// front (throwing ConfigError/ParseError before any check runs) and defer
// only the numerics to run().

struct CheckOutcome {
  bool pass = false;
  json details;
};

using CheckRunner = std::function<CheckOutcome()>;

struct PreparedCheck {
  std::string type;
  std::string label;
  CheckRunner run;
};

double rows_max_deviation(const clockwork::TimelinessReport& report) {
  double worst = 0.0;
  for (const auto& row : report.per_trajectory) {
    worst = std::max(worst, row.max_deviation);
  }
  return worst;
}

CheckRunner prepare_timeliness(const Env& env, const json& p, Rng rng,
                               const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  auto candidate = parse_candidate(p, "tau", ctx, where);
  auto states = parse_states(require_key(p, "states", where),
                             ctx.system.space().dim(), rng, where);
  auto grid = parse_grid(require_key(p, "grid", where), where);
  require_zero_node(grid, where);
  const double tol = headline_tol(env, p, 1e-6, where);
  return [&env, candidate, states, grid, tol]() {
    const auto report = clockwork::verify_timeliness(
        env.classical->system, candidate, states, grid, tol, env.integrator);
    CheckOutcome out;
    out.pass = report.pass;
    out.details["tau"] = candidate.label;
    out.details["tolerance"] = tol;
    out.details["max_deviation"] = rows_max_deviation(report);
    json rows = json::array();
    for (const auto& row : report.per_trajectory) {
      json r;
      r["initial_state"] = vec_json(row.initial_state);
      r["max_deviation"] = row.max_deviation;
      r["covered_nodes"] = row.covered_nodes;
      r["requested_nodes"] = row.requested_nodes;
      r["outcome"] = outcome_json(row.outcome);
      rows.push_back(std::move(r));
    }
    out.details["trajectories"] = std::move(rows);
    return out;
  };
}

CheckRunner prepare_local_timeliness(const Env& env, const json& p, Rng rng,
                                     const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  auto candidate = parse_candidate(p, "tau", ctx, where);
  auto states = parse_states(require_key(p, "states", where),
                             ctx.system.space().dim(), rng, where);
  const double tol = headline_tol(env, p, 1e-6, where);
  return [&env, candidate, states, tol]() {
    const auto report = clockwork::verify_local_timeliness(env.classical->system,
                                                           candidate, states, tol);
    CheckOutcome out;
    out.pass = report.pass;
    out.details["tau"] = candidate.label;
    out.details["tolerance"] = tol;
    out.details["max_deviation"] = report.max_deviation;
    out.details["samples"] = report.samples.size();
    return out;
  };
}

CheckRunner prepare_construct_clock(const Env& env, const json& p, Rng rng,
                                    const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  const int dim = ctx.system.space().dim();
  std::vector<Vec> anchors;
  if (p.contains("anchor")) {
    anchors.push_back(parse_vec(p.at("anchor"), dim, where + ".anchor"));
  } else {
    anchors = parse_states(require_key(p, "anchors", where), dim, rng, where);
  }
  const double radius = get_double(p, "radius", 0.5, where);
  if (!(radius > 0.0)) fail_config(where, "radius must be positive");
  const double tol = headline_tol(env, p, 1e-6, where);
  const long samples = get_long(p, "samples", 200, where);
  const long pairs = get_long(p, "pairs", 50, where);
  const std::string expect_error = get_string(p, "expect_error", "", where);
  std::optional<clockwork::CandidateObservable> compare;
  if (p.contains("compare_tau")) compare = parse_candidate(p, "compare_tau", ctx, where);
  const std::uint64_t base_seed = rng.raw();

  return [&env, anchors, radius, tol, samples, pairs, expect_error, compare,
          base_seed]() {
    CheckOutcome out;
    out.pass = true;
    out.details["tolerance"] = tol;
    json rows = json::array();
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      json row;
      row["anchor"] = vec_json(anchors[i]);
      clockwork::ClockConfig cc;
      cc.tol = tol;
      cc.seed = base_seed + i;
      cc.integrator = env.integrator;
      cc.validation_samples = static_cast<int>(samples);
      cc.validation_pairs = static_cast<int>(pairs);
      if (!expect_error.empty()) {
        std::string raised = "none";
        try {
          (void)clockwork::construct_local_clock(env.classical->system, anchors[i],
                                                 radius, cc);
        } catch (const StationaryPoint&) {
          raised = "StationaryPoint";
        } catch (const ValidationFailed&) {
          raised = "ValidationFailed";
        }
        row["expected_error"] = expect_error;
        row["raised"] = raised;
        if (raised != expect_error) out.pass = false;
        rows.push_back(std::move(row));
        continue;
      }
      try {
        clockwork::LocalClock clock =
            clockwork::construct_local_clock(env.classical->system, anchors[i],
                                             radius, cc);
        row["validated_radius"] = clock.radius;
        row["time_bound"] = clock.time_bound;
        row["samples_checked"] = clock.validation.samples_checked;
        row["pairs_checked"] = clock.validation.pairs_checked;
        row["max_pair_residual"] = clock.validation.max_pair_residual;
        row["shrinks"] = clock.validation.shrinks;
        if (!(clock.validation.max_pair_residual <= tol)) out.pass = false;
        if (compare) {
          // The clock and the reference candidate must advance identically
          // along the flow: their difference is a constant of motion, so its
          // drift over a short in-ball trajectory through the anchor bounds
          // the disagreement.
          auto shared = std::make_shared<clockwork::LocalClock>(std::move(clock));
          const flow::IntegratorConfig icfg = env.integrator;
          geometry::ScalarField clock_field(
              [shared, icfg](const Vec& y) {
                return clockwork::clock_value(*shared, y, icfg);
              },
              "constructed_clock");
          const double speed =
              geometry::hamiltonian_vector_field(env.classical->system,
                                                 env.classical->system.hamiltonian(),
                                                 anchors[i])
                  .norm();
          const double span = 0.3 * shared->radius / speed;
          std::vector<double> grid(7);
          for (int g = 0; g < 7; ++g) grid[static_cast<std::size_t>(g)] =
              -span + 2.0 * span * static_cast<double>(g) / 6.0;
          grid[3] = 0.0;
          const auto report = clockwork::uniqueness_decomposition(
              env.classical->system,
              clockwork::CandidateObservable{clock_field, "constructed_clock"},
              *compare, {anchors[i]}, grid, tol, env.integrator);
          row["clock_vs_reference_drift"] = report.per_trajectory[0].drift;
          if (!report.pass) out.pass = false;
        }
      } catch (const StationaryPoint& e) {
        row["failure"] = std::string("StationaryPoint: ") + e.what();
        out.pass = false;
      } catch (const ValidationFailed& e) {
        row["failure"] = std::string("ValidationFailed: ") + e.what();
        out.pass = false;
      }
      rows.push_back(std::move(row));
    }
    out.details["clocks"] = std::move(rows);
    return out;
  };
}

CheckRunner prepare_uniqueness(const Env& env, const json& p, Rng rng,
                               const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  auto tau1 = parse_candidate(p, "tau1", ctx, where);
  auto tau2 = parse_candidate(p, "tau2", ctx, where);
  auto states = parse_states(require_key(p, "states", where),
                             ctx.system.space().dim(), rng, where);
  auto grid = parse_grid(require_key(p, "grid", where), where);
  require_zero_node(grid, where);
  const double tol = headline_tol(env, p, 1e-6, where);
  return [&env, tau1, tau2, states, grid, tol]() {
    const auto report = clockwork::uniqueness_decomposition(
        env.classical->system, tau1, tau2, states, grid, tol, env.integrator);
    CheckOutcome out;
    out.pass = report.pass;
    out.details["tau1"] = tau1.label;
    out.details["tau2"] = tau2.label;
    out.details["tolerance"] = tol;
    json rows = json::array();
    double worst = 0.0;
    for (const auto& row : report.per_trajectory) {
      worst = std::max(worst, row.drift);
      json r;
      r["initial_state"] = vec_json(row.initial_state);
      r["drift"] = row.drift;
      r["outcome"] = outcome_json(row.outcome);
      rows.push_back(std::move(r));
    }
    out.details["max_drift"] = worst;
    out.details["trajectories"] = std::move(rows);
    return out;
  };
}

CheckRunner prepare_energy_descent(const Env& env, const json& p, Rng /*rng*/,
                                   const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  auto candidate = parse_candidate(p, "tau", ctx, where);
  const Vec state = parse_vec(require_key(p, "state", where),
                              ctx.system.space().dim(), where + ".state");
  auto grid = parse_grid(require_key(p, "grid", where), where);
  if (grid.front() != 0.0) fail_config(where, "grid must start at 0");
  const double tol = headline_tol(env, p, 1e-6, where);
  const double slope_tol = get_double(p, "slope_tol", 1e-6, where);
  const double residual_tol = get_double(p, "residual_tol", 1e-8, where);
  return [&env, candidate, state, grid, tol, slope_tol, residual_tol]() {
    const auto report = clockwork::energy_descent_check(
        env.classical->system, candidate, state, grid, tol, env.integrator);
    CheckOutcome out;
    const bool slope_ok =
        report.covered_nodes >= 2 && std::abs(report.slope + 1.0) <= slope_tol &&
        report.max_residual <= residual_tol;
    out.pass = report.pass && slope_ok;
    out.details["tau"] = candidate.label;
    out.details["tolerance"] = tol;
    out.details["max_deviation"] = report.max_deviation;
    out.details["slope"] = report.slope;
    out.details["slope_tolerance"] = slope_tol;
    out.details["max_residual"] = report.max_residual;
    out.details["residual_tolerance"] = residual_tol;
    out.details["covered_nodes"] = report.covered_nodes;
    out.details["requested_nodes"] = report.requested_nodes;
    out.details["outcome"] = outcome_json(report.outcome);
    return out;
  };
}

CheckRunner prepare_incompleteness(const Env& env, const json& p, Rng rng,
                                   const std::string& where) {
  const ClassicalContext& ctx = need_classical(env, where);
  auto candidate = parse_candidate(p, "tau", ctx, where);
  auto states = parse_states(require_key(p, "states", where),
                             ctx.system.space().dim(), rng, where);
  const double h_inf = as_double(require_key(p, "h_inf", where), where + ".h_inf");
  const double margin = get_double(p, "margin", 1e-3, where);
  const double local_tol = get_double(p, "local_tol", 1e-6, where);
  return [&env, candidate, states, h_inf, margin, local_tol]() {
    const auto cert = clockwork::incompleteness_certificate(
        env.classical->system, candidate, states, h_inf, env.integrator, local_tol,
        margin);
    CheckOutcome out;
    out.pass = cert.pass;
    out.details["tau"] = candidate.label;
    out.details["h_inf"] = cert.h_inf;
    out.details["bound_margin"] = cert.bound_margin;
    out.details["local_timeliness_deviation"] = cert.local_timeliness_deviation;
    json rows = json::array();
    for (const auto& s : cert.samples) {
      json r;
      r["initial_state"] = vec_json(s.initial_state);
      r["predicted_bound"] = s.predicted_bound;
      r["escape_midpoint"] = s.escape_midpoint;
      r["escaped_within_bound"] = s.escaped_within_bound;
      r["outcome"] = outcome_json(s.outcome);
      rows.push_back(std::move(r));
    }
    out.details["samples"] = std::move(rows);
    return out;
  };
}

CheckRunner prepare_recurrence(const Env& env, const json& p, Rng rng,
                               const std::string& where) {
  const double horizon = get_double(p, "horizon", 100.0, where);
  const double eps = get_double(p, "eps", 1e-6, where);
  const auto expect_T = get_optional_double(p, "expect_T", where);
  const double T_tol = get_double(p, "T_tol", 1e-5, where);
  const bool expect_absent = get_bool(p, "expect_absent", false, where);
  if (!(horizon > 0.0) || !(eps > 0.0)) {
    fail_config(where, "horizon and eps must be positive");
  }

  if (env.classical) {
    const Vec state = parse_vec(require_key(p, "state", where),
                                env.classical->system.space().dim(), where + ".state");
    return [&env, state, horizon, eps, expect_T, T_tol, expect_absent]() {
      const auto found = clockwork::recurrence_obstruction(
          env.classical->system, state, horizon, eps, env.integrator);
      CheckOutcome out;
      out.details["horizon"] = horizon;
      out.details["eps"] = eps;
      out.details["found"] = static_cast<bool>(found);
      if (found) {
        out.details["T"] = found->T;
        out.details["distance"] = found->distance;
      }
      if (expect_absent) {
        out.pass = !found;
        out.details["expected"] = "absent";
      } else if (expect_T) {
        out.details["expected_T"] = *expect_T;
        out.details["T_tolerance"] = T_tol;
        out.pass = found && std::abs(found->T - *expect_T) <= T_tol;
      } else {
        out.pass = static_cast<bool>(found);
      }
      return out;
    };
  }

  const kahler::QuantumSystem& qs = need_quantum(env, where);
  const std::uint64_t state_seed = rng.raw();
  (void)qs;
  return [&env, state_seed, horizon, eps, expect_T, T_tol, expect_absent]() {
    Rng rng_local(state_seed);
    const kahler::ProjectivePoint start =
        kahler::random_state(env.quantum->dim, rng_local);
    const kahler::Chart chart = kahler::chart_at(start);
    const geometry::DynamicalSystem sys = kahler::chart_system(*env.quantum, chart);
    const Vec u0 = kahler::chart_coords(chart, start.representative());
    const auto found =
        clockwork::recurrence_obstruction(sys, u0, horizon, eps, env.integrator);
    CheckOutcome out;
    out.details["horizon"] = horizon;
    out.details["eps"] = eps;
    out.details["found"] = static_cast<bool>(found);
    if (found) {
      out.details["T"] = found->T;
      out.details["distance"] = found->distance;
    }
    if (expect_absent) {
      out.pass = !found;
      out.details["expected"] = "absent";
    } else if (expect_T) {
      out.details["expected_T"] = *expect_T;
      out.details["T_tolerance"] = T_tol;
      out.pass = found && std::abs(found->T - *expect_T) <= T_tol;
    } else {
      out.pass = static_cast<bool>(found);
    }
    return out;
  };
}

CheckRunner prepare_kahler_identities(const Env& env, const json& p, Rng rng,
                                      const std::string& where) {
  int dim = 0;
  if (p.contains("dim")) {
    dim = static_cast<int>(get_long(p, "dim", 0, where));
  } else if (env.quantum) {
    dim = env.quantum->dim;
  } else {
    fail_config(where, "needs \"dim\" or a quantum system");
  }
  if (dim < 2) fail_config(where, "dim must be at least 2");
  const long samples = get_long(p, "samples", 100, where);
  if (samples < 1) fail_config(where, "samples must be positive");
  const double tol = headline_tol(env, p, 1e-12, where);
  const std::uint64_t seed = rng.raw();
  return [dim, samples, tol, seed]() {
    const auto r = kahler::kahler_identity_residuals(dim, static_cast<int>(samples),
                                                     seed);
    CheckOutcome out;
    out.pass = r.max() <= tol;
    out.details["dim"] = dim;
    out.details["samples"] = samples;
    out.details["tolerance"] = tol;
    out.details["compatibility"] = r.compatibility;
    out.details["j_invariance_g"] = r.j_invariance_g;
    out.details["j_invariance_omega"] = r.j_invariance_omega;
    out.details["phase_invariance"] = r.phase_invariance;
    out.details["max_residual"] = r.max();
    return out;
  };
}

CheckRunner prepare_killing(const Env& env, const json& p, Rng rng,
                            const std::string& where) {
  need_quantum(env, where);
  const long states = get_long(p, "states", 2, where);
  const long tangent_samples = get_long(p, "tangent_samples", 4, where);
  const long random_expectation = get_long(p, "random_expectation", 2, where);
  const double killing_tol = get_double(p, "killing_tol", 1e-5, where);
  const double weinberg_tol = get_double(p, "weinberg_tol", 1e-3, where);
  const double norm_drift_tol = get_double(p, "norm_drift_tol", 1e-8, where);
  const double delta = get_double(p, "delta", 1e-4, where);
  const double fd_eps = get_double(p, "fd_eps", 5e-4, where);
  if (states < 1 || tangent_samples < 1) {
    fail_config(where, "states and tangent_samples must be positive");
  }
  const std::uint64_t seed = rng.raw();
  return [&env, states, tangent_samples, random_expectation, killing_tol,
          weinberg_tol, norm_drift_tol, delta, fd_eps, seed]() {
    using kahler::ObservableFunction;
    const kahler::QuantumSystem& qs = *env.quantum;
    const int n = qs.dim;
    Rng rng_local(seed);

    std::vector<ObservableFunction> expectation_fns;
    expectation_fns.push_back(ObservableFunction::expectation(qs.hamiltonian, "h"));
    const auto basis = kahler::pauli_like_basis(n);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      expectation_fns.push_back(
          ObservableFunction::expectation(basis[i], "pauli_" + std::to_string(i + 1)));
    }
    for (long i = 0; i < random_expectation; ++i) {
      expectation_fns.push_back(ObservableFunction::expectation(
          kahler::random_hermitian(n, rng_local), "random_" + std::to_string(i + 1)));
    }
    std::vector<ObservableFunction> weinberg_fns;
    weinberg_fns.push_back(
        ObservableFunction::weinberg_square(qs.hamiltonian, "square(h)"));
    weinberg_fns.push_back(
        ObservableFunction::weinberg_square(basis[0], "square(pauli_1)"));
    if (basis.size() > 1) {
      weinberg_fns.push_back(ObservableFunction::weinberg_product(
          basis[0], basis[1], "product(pauli_1, pauli_2)"));
    }

    std::vector<kahler::ProjectivePoint> points;
    for (long i = 0; i < states; ++i) points.push_back(kahler::random_state(n, rng_local));

    CheckOutcome out;
    json exp_rows = json::array();
    double worst_expectation = 0.0;
    std::uint64_t sub_seed = seed;
    for (const auto& fn : expectation_fns) {
      double worst = 0.0;
      for (const auto& psi : points) {
        worst = std::max(worst,
                         kahler::killing_residual(fn, psi, static_cast<int>(tangent_samples),
                                                  delta, ++sub_seed, fd_eps));
      }
      worst_expectation = std::max(worst_expectation, worst);
      exp_rows.push_back({{"label", fn.label()}, {"max_residual", worst}});
    }
    json wei_rows = json::array();
    double weakest_weinberg = std::numeric_limits<double>::infinity();
    for (const auto& fn : weinberg_fns) {
      double weakest = std::numeric_limits<double>::infinity();
      for (const auto& psi : points) {
        weakest = std::min(weakest,
                           kahler::killing_residual(fn, psi, static_cast<int>(tangent_samples),
                                                    delta, ++sub_seed, fd_eps));
      }
      weakest_weinberg = std::min(weakest_weinberg, weakest);
      wei_rows.push_back({{"label", fn.label()}, {"min_residual", weakest}});
    }

    // Lemma-level companion: the field's metric norm must be constant along
    // its own flow for the expectation kind.
    std::vector<double> s_grid(9);
    for (int i = 0; i < 9; ++i) {
      s_grid[static_cast<std::size_t>(i)] =
          4.0 * 3.141592653589793 * static_cast<double>(i) / 8.0;
    }
    const double drift = kahler::killing_norm_constancy(
        expectation_fns.front(), points.front(), s_grid, env.integrator);

    out.pass = worst_expectation <= killing_tol && weakest_weinberg >= weinberg_tol &&
               drift <= norm_drift_tol;
    out.details["killing_tolerance"] = killing_tol;
    out.details["weinberg_tolerance"] = weinberg_tol;
    out.details["max_expectation_residual"] = worst_expectation;
    out.details["min_weinberg_residual"] = weakest_weinberg;
    out.details["expectation_functions"] = std::move(exp_rows);
    out.details["weinberg_functions"] = std::move(wei_rows);
    out.details["norm_drift"] = drift;
    out.details["norm_drift_tolerance"] = norm_drift_tol;
    return out;
  };
}

CheckRunner prepare_pauli_demo(const Env& env, const json& p, Rng rng,
                               const std::string& where) {
  need_quantum(env, where);
  const double tol = headline_tol(env, p, 1e-3, where);
  const auto expect_T = get_optional_double(p, "expect_T", where);
  const double T_tol = get_double(p, "T_tol", 1e-5, where);
  const double return_min = get_double(p, "return_min", 1.0, where);
  const long random_candidates = get_long(p, "random_candidates", 10, where);
  const bool include_identity = get_bool(p, "include_identity", true, where);
  kahler::PauliDemoConfig cfg;
  cfg.bracket_samples = static_cast<int>(get_long(p, "bracket_samples", 20, where));
  cfg.orbit_starts = static_cast<int>(get_long(p, "orbit_starts", 2, where));
  cfg.grid_nodes = static_cast<int>(get_long(p, "grid_nodes", 32, where));
  cfg.recurrence_eps = get_double(p, "eps", 1e-6, where);
  cfg.recurrence_horizon = get_double(p, "horizon", 50.0, where);
  cfg.integrator = env.integrator;
  cfg.seed = rng.raw();
  const std::uint64_t candidate_seed = rng.raw();

  return [&env, tol, expect_T, T_tol, return_min, random_candidates,
          include_identity, cfg, candidate_seed]() {
    using kahler::ObservableFunction;
    const kahler::QuantumSystem& qs = *env.quantum;
    const int n = qs.dim;
    std::vector<ObservableFunction> candidates;
    const auto basis = kahler::pauli_like_basis(n);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      candidates.push_back(
          ObservableFunction::expectation(basis[i], "pauli_" + std::to_string(i + 1)));
    }
    if (include_identity) {
      candidates.push_back(
          ObservableFunction::expectation(CMat::Identity(n, n), "identity"));
    }
    Rng rng_local(candidate_seed);
    for (long i = 0; i < random_candidates; ++i) {
      candidates.push_back(ObservableFunction::expectation(
          kahler::random_hermitian(n, rng_local), "random_" + std::to_string(i + 1)));
    }

    const auto report = kahler::pauli_obstruction_demo(qs, candidates, tol, cfg);
    double min_return = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (const auto& row : report.candidates) {
      min_return = std::min(min_return, row.return_deviation);
      rows.push_back({{"label", row.label},
                      {"bracket_deviation", row.bracket_deviation},
                      {"timeliness_deviation", row.timeliness_deviation},
                      {"return_deviation", row.return_deviation},
                      {"failed", row.failed}});
    }

    CheckOutcome out;
    out.pass = report.pass && min_return >= return_min;
    out.details["tolerance"] = tol;
    out.details["recurrence_T"] = report.recurrence_T;
    out.details["recurrence_distance"] = report.recurrence_distance;
    out.details["min_return_deviation"] = min_return;
    out.details["return_min"] = return_min;
    out.details["all_candidates_fail"] = report.pass;
    out.details["candidates"] = std::move(rows);
    if (expect_T) {
      out.details["expected_T"] = *expect_T;
      out.details["T_tolerance"] = T_tol;
      out.pass = out.pass && std::abs(report.recurrence_T - *expect_T) <= T_tol;
    }
    return out;
  };
}

CheckRunner prepare_schrodinger(const Env& env, const json& p, Rng rng,
                                const std::string& where) {
  need_quantum(env, where);
  const long count = get_long(p, "count", 5, where);
  if (count < 1) fail_config(where, "count must be positive");
  auto grid = parse_grid(require_key(p, "grid", where), where);
  if (grid.front() != 0.0) fail_config(where, "grid must start at 0");
  const double tol = headline_tol(env, p, 1e-8, where);
  const std::uint64_t seed = rng.raw();
  return [&env, count, grid, tol, seed]() {
    const kahler::QuantumSystem& qs = *env.quantum;
    const int n = qs.dim;
    Rng rng_local(seed);
    double worst = 0.0;
    for (long k = 0; k < count; ++k) {
      const CMat F = kahler::random_hermitian(n, rng_local);
      const kahler::ProjectivePoint psi0 = kahler::random_state(n, rng_local);
      const auto obs = kahler::ObservableFunction::expectation(F, "F");
      const auto flow = kahler::projective_flow_sampled(qs, obs, psi0, grid,
                                                        env.integrator);
      if (flow.outcome.verdict != flow::Verdict::Completed) {
        throw ValidationFailed("schrodinger check: flow did not complete");
      }
      for (std::size_t i = 0; i < flow.states.size(); ++i) {
        const CVec exact =
            kahler::evolve_exact(F, psi0.representative(), flow.parameters[i]);
        worst = std::max(worst, kahler::projective_distance(
                                    flow.states[i].representative(), exact));
      }
    }
    CheckOutcome out;
    out.pass = worst <= tol;
    out.details["count"] = count;
    out.details["tolerance"] = tol;
    out.details["max_distance"] = worst;
    return out;
  };
}

PreparedCheck prepare_check(const Env& env, const json& spec, std::size_t index) {
  std::ostringstream os;
  os << "checks[" << index << "]";
  const std::string where = os.str();
  if (!spec.is_object()) fail_config(where, "each check must be an object");
  const std::string type = require_key(spec, "type", where).get<std::string>();
  const std::string label = get_string(spec, "label", type, where);
  // Per-check RNG stream: decorrelated from the others, stable under check
  // reordering of unrelated checks only by index.
  Rng rng(env.seed + 0x9E3779B97F4A7C15ULL * (index + 1));

  PreparedCheck prepared;
  prepared.type = type;
  prepared.label = label;
  if (type == "timeliness") {
    prepared.run = prepare_timeliness(env, spec, std::move(rng), where);
  } else if (type == "local_timeliness") {
    prepared.run = prepare_local_timeliness(env, spec, std::move(rng), where);
  } else if (type == "construct_clock") {
    prepared.run = prepare_construct_clock(env, spec, std::move(rng), where);
  } else if (type == "uniqueness") {
    prepared.run = prepare_uniqueness(env, spec, std::move(rng), where);
  } else if (type == "energy_descent") {
    prepared.run = prepare_energy_descent(env, spec, std::move(rng), where);
  } else if (type == "incompleteness") {
    prepared.run = prepare_incompleteness(env, spec, std::move(rng), where);
  } else if (type == "recurrence") {
    prepared.run = prepare_recurrence(env, spec, std::move(rng), where);
  } else if (type == "kahler_identities") {
    prepared.run = prepare_kahler_identities(env, spec, std::move(rng), where);
  } else if (type == "killing") {
    prepared.run = prepare_killing(env, spec, std::move(rng), where);
  } else if (type == "pauli_demo") {
    prepared.run = prepare_pauli_demo(env, spec, std::move(rng), where);
  } else if (type == "schrodinger") {
    prepared.run = prepare_schrodinger(env, spec, std::move(rng), where);
  } else {
    fail_config(where, "unknown check type \"" + type + "\"");
  }
  return prepared;
}

// ---------------------------------------------------------------------------
// Trajectory outputs.

struct TrajectoryRequest {
  std::string filename;
  geometry::ScalarField generator;
  std::string generator_label;
  Vec initial_state;
  std::pair<double, double> span;
};

std::vector<TrajectoryRequest> prepare_trajectories(const Env& env, const json& doc) {
  std::vector<TrajectoryRequest> requests;
  if (!doc.contains("outputs")) return requests;
  const json& outputs = doc.at("outputs");
  if (!outputs.is_object() || !outputs.contains("trajectories")) return requests;
  const json& list = outputs.at("trajectories");
  if (!list.is_array()) fail_config("outputs.trajectories", "must be an array");
  const ClassicalContext& ctx = need_classical(env, "outputs.trajectories");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::ostringstream os;
    os << "outputs.trajectories[" << i << "]";
    const std::string where = os.str();
    const json& t = list.at(i);
    TrajectoryRequest req{
        require_key(t, "path", where).get<std::string>(),
        ctx.system.hamiltonian(),
        "h",
        parse_vec(require_key(t, "initial_state", where), ctx.system.space().dim(),
                  where),
        {0.0, 0.0}};
    if (req.filename.empty() || req.filename.find('/') != std::string::npos ||
        req.filename.find('\\') != std::string::npos) {
      fail_config(where, "path must be a bare file name");
    }
    const json& span = require_key(t, "span", where);
    if (!span.is_array() || span.size() != 2) fail_config(where, "span must be [a, b]");
    req.span = {as_double(span.at(0), where), as_double(span.at(1), where)};
    if (t.contains("generator")) {
      const json& gen = t.at("generator");
      if (gen.is_string() && gen.get<std::string>() == "h") {
        // keep the Hamiltonian
      } else if (gen.is_object() && gen.contains("tau")) {
        const auto cand = parse_candidate(gen, "tau", ctx, where);
        req.generator = cand.tau;
        req.generator_label = cand.label;
      } else {
        fail_config(where, "generator must be \"h\" or {\"tau\": expression}");
      }
    }
    requests.push_back(std::move(req));
  }
  return requests;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface.

std::string config_hash(const json& doc) {
  const std::string dump = doc.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string trajectory_csv(const flow::Trajectory& trajectory,
                           const std::vector<std::string>& coordinate_names) {
  std::ostringstream out;
  out << "t";
  for (const std::string& name : coordinate_names) out << "," << name;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < trajectory.parameter_samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", trajectory.parameter_samples[i]);
    out << buf;
    const Vec& x = trajectory.states[i];
    for (int c = 0; c < x.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[c]);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json load_scenario(const std::string& ref, std::string* source_label) {
  if (auto builtin = builtin_document(ref)) {
    if (source_label) *source_label = "builtin:" + ref;
    return *builtin;
  }
  std::ifstream in(ref);
  if (!in) {
    throw ConfigError("cannot open scenario \"" + ref +
                      "\" (not a builtin name or readable file)");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (source_label) *source_label = ref;
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what(), e.byte);
  }
}

RunResult run_scenario(const json& doc, const RunOptions& options,
                       const std::string& source_label) {
  if (!doc.is_object()) throw ConfigError("scenario document must be a JSON object");

  Env env;
  env.seed = options.seed.value_or(
      static_cast<std::uint64_t>(get_long(doc, "seed", 0, "scenario")));
  env.tol_override = options.tol;
  env.integrator = parse_integrator(doc, "integrator");
  if (options.horizon) {
    env.integrator.horizon = *options.horizon;
    env.integrator.validate();
  }

  const json& system = require_key(doc, "system", "scenario");
  const std::string system_type =
      require_key(system, "type", "system").get<std::string>();
  if (system_type == "classical") {
    env.classical = parse_classical(system, "system");
  } else if (system_type == "quantum") {
    if (system.contains("path")) {
      const std::string path = system.at("path").get<std::string>();
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open quantum system file \"" + path + "\"");
      std::ostringstream buffer;
      buffer << in.rdbuf();
      try {
        env.quantum = kahler::quantum_system_from_json(json::parse(buffer.str()));
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("quantum system JSON: ") + e.what(), e.byte);
      }
    } else {
      env.quantum = kahler::quantum_system_from_json(system);
    }
  } else {
    fail_config("system", "type must be \"classical\" or \"quantum\"");
  }

  std::vector<PreparedCheck> prepared;
  if (doc.contains("checks")) {
    const json& checks = doc.at("checks");
    if (!checks.is_array()) fail_config("checks", "must be an array");
    for (std::size_t i = 0; i < checks.size(); ++i) {
      prepared.push_back(prepare_check(env, checks.at(i), i));
    }
  }
  const std::vector<TrajectoryRequest> trajectory_requests =
      prepare_trajectories(env, doc);

  RunResult result;
  json checks_json = json::array();
  bool all_passed = true;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    json record;
    record["index"] = i;
    record["type"] = prepared[i].type;
    record["label"] = prepared[i].label;
    const auto start = std::chrono::steady_clock::now();
    try {
      const CheckOutcome outcome = prepared[i].run();
      record["verdict"] = outcome.pass ? "pass" : "fail";
      record["details"] = outcome.details;
      all_passed = all_passed && outcome.pass;
    } catch (const Error& e) {
      record["verdict"] = "error";
      record["message"] = e.what();
      all_passed = false;
    }
    const auto stop = std::chrono::steady_clock::now();
    record["timing_ms"] =
        std::chrono::duration<double, std::milli>(stop - start).count();
    checks_json.push_back(std::move(record));
  }

  // Trajectory CSVs (only with an output directory; requests are still
  // validated and recorded without one).
  json outputs_json = json::array();
  for (const TrajectoryRequest& req : trajectory_requests) {
    json record;
    record["path"] = req.filename;
    record["generator"] = req.generator_label;
    record["initial_state"] = vec_json(req.initial_state);
    record["span"] = {req.span.first, req.span.second};
    const auto [trajectory, outcome] =
        flow::integrate(env.classical->system, req.generator, req.initial_state,
                        req.span, env.integrator);
    record["samples"] = trajectory.size();
    record["outcome"] = outcome_json(outcome);
    record["written"] = false;
    if (!options.out_dir.empty()) {
      namespace fs = std::filesystem;
      fs::create_directories(options.out_dir);
      const fs::path target = fs::path(options.out_dir) / req.filename;
      std::ofstream out(target);
      if (!out) throw ConfigError("cannot write trajectory file " + target.string());
      out << trajectory_csv(trajectory, env.classical->coordinates);
      record["written"] = true;
      result.written_files.push_back(target.string());
    }
    outputs_json.push_back(std::move(record));
  }

  json report;
  report["toolkit_version"] = kVersion;
  report["scenario"] = {{"name", get_string(doc, "name", "unnamed", "scenario")},
                        {"source", source_label},
                        {"config_hash", config_hash(doc)}};
  report["seed"] = env.seed;
  report["checks"] = std::move(checks_json);
  if (!outputs_json.empty()) report["trajectories"] = std::move(outputs_json);
  report["verdict"] = all_passed ? "pass" : "fail";

  result.report = std::move(report);
  result.all_passed = all_passed;
  return result;
}

}  // namespace tempo::scenario
