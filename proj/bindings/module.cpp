// Python bindings for the timelessness toolkit.  The module mirrors the CLI
// surface (list_examples / load_scenario / run_scenario) and exposes the main
// library operations: classical bracket checks and flows, timeliness
// verification, and the projective quantum machinery.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tempo/clockwork.hpp"
#include "tempo/errors.hpp"
#include "tempo/expr.hpp"
#include "tempo/flow.hpp"
#include "tempo/geometry.hpp"
#include "tempo/kahler.hpp"
#include "tempo/rng.hpp"
#include "tempo/scenario.hpp"
#include "tempo/types.hpp"
#include "tempo/version.hpp"

namespace py = pybind11;
using tempo::CMat;
using tempo::CVec;
using tempo::Vec;

namespace {

namespace geometry = tempo::geometry;

nlohmann::json to_json(const py::object& obj) {
  const py::module_ pyjson = py::module_::import("json");
  const std::string text = py::cast<std::string>(pyjson.attr("dumps")(obj));
  return nlohmann::json::parse(text);
}

py::object from_json(const nlohmann::json& j) {
  const py::module_ pyjson = py::module_::import("json");
  return pyjson.attr("loads")(py::str(j.dump()));
}

py::dict outcome_dict(const tempo::flow::FlowOutcome& outcome) {
  py::dict d;
  d["verdict"] = tempo::flow::to_string(outcome.verdict);
  if (outcome.escape_bracket) {
    d["escape_bracket"] =
        py::make_tuple(outcome.escape_bracket->first, outcome.escape_bracket->second);
  } else {
    d["escape_bracket"] = py::none();
  }
  return d;
}

// Classical Hamiltonian system defined by coordinate names and expression
// strings; wraps the geometry/flow/clockwork layers behind one object.
class PyClassicalSystem {
 public:
  PyClassicalSystem(std::vector<std::string> coordinates,
                    const std::string& hamiltonian,
                    const std::vector<std::string>& domain, double scale)
      : coordinates_(std::move(coordinates)),
        system_(make_system(coordinates_, hamiltonian, domain, scale)) {}

  int dim() const { return system_.space().dim(); }
  const std::vector<std::string>& coordinates() const { return coordinates_; }

  double hamiltonian(const Vec& x) const { return system_.hamiltonian()(x); }

  double bracket(const std::string& f, const std::string& g, const Vec& x) const {
    return geometry::poisson_bracket(system_, field(f), field(g), x);
  }

  Vec hamiltonian_field(const Vec& x) const {
    return geometry::hamiltonian_vector_field(system_, system_.hamiltonian(), x);
  }

  py::dict integrate(const Vec& x0, std::pair<double, double> span,
                     const std::optional<std::string>& generator) const {
    const geometry::ScalarField gen =
        generator ? field(*generator) : system_.hamiltonian();
    const auto [trajectory, outcome] =
        tempo::flow::integrate(system_, gen, x0, span, config_);
    py::dict d;
    d["t"] = trajectory.parameter_samples;
    d["states"] = trajectory.states;
    d["outcome"] = outcome_dict(outcome);
    return d;
  }

  std::optional<double> escape_time(const Vec& x0,
                                    const std::optional<std::string>& generator,
                                    double horizon) const {
    tempo::flow::IntegratorConfig cfg = config_;
    cfg.horizon = horizon;
    cfg.validate();
    const geometry::ScalarField gen =
        generator ? field(*generator) : system_.hamiltonian();
    return tempo::flow::escape_time(system_, gen, x0, cfg);
  }

  py::dict verify_timeliness(const std::string& tau, const std::vector<Vec>& states,
                             const std::vector<double>& grid, double tol) const {
    const auto report = tempo::clockwork::verify_timeliness(
        system_, candidate(tau), states, grid, tol, config_);
    py::dict d;
    d["pass"] = report.pass;
    d["tolerance"] = report.tolerance;
    py::list rows;
    for (const auto& row : report.per_trajectory) {
      py::dict r;
      r["initial_state"] = row.initial_state;
      r["max_deviation"] = row.max_deviation;
      r["covered_nodes"] = row.covered_nodes;
      r["requested_nodes"] = row.requested_nodes;
      r["outcome"] = outcome_dict(row.outcome);
      rows.append(std::move(r));
    }
    d["per_trajectory"] = std::move(rows);
    return d;
  }

  py::dict verify_local_timeliness(const std::string& tau,
                                   const std::vector<Vec>& states, double tol) const {
    const auto report =
        tempo::clockwork::verify_local_timeliness(system_, candidate(tau), states, tol);
    py::dict d;
    d["pass"] = report.pass;
    d["tolerance"] = report.tolerance;
    d["max_deviation"] = report.max_deviation;
    return d;
  }

  std::optional<py::dict> recurrence(const Vec& x0, double horizon, double eps) const {
    const auto found =
        tempo::clockwork::recurrence_obstruction(system_, x0, horizon, eps, config_);
    if (!found) return std::nullopt;
    py::dict d;
    d["T"] = found->T;
    d["distance"] = found->distance;
    return d;
  }

 private:
  static geometry::DynamicalSystem make_system(
      const std::vector<std::string>& names, const std::string& hamiltonian,
      const std::vector<std::string>& domain, double scale) {
    const int dim = static_cast<int>(names.size());
    if (dim < 2 || dim % 2 != 0) {
      throw tempo::ConfigError("coordinates must be an even-length name list");
    }
    const tempo::expr::Expression h = tempo::expr::Expression::parse(hamiltonian, names);
    geometry::PhaseSpace space = [&]() {
      if (domain.empty()) return geometry::PhaseSpace(dim, names, nullptr);
      std::vector<tempo::expr::Expression> constraints;
      for (const std::string& text : domain) {
        constraints.push_back(tempo::expr::Expression::parse(text, names));
      }
      auto predicate = [constraints](const Vec& x) {
        for (const auto& g : constraints) {
          const double v = g.evaluate(x);
          if (!std::isfinite(v) || v <= 0.0) return false;
        }
        return true;
      };
      return geometry::PhaseSpace(dim, names, std::move(predicate));
    }();
    geometry::SymplecticForm form =
        scale == 1.0 ? geometry::SymplecticForm::canonical(dim)
                     : geometry::SymplecticForm::scaled_canonical(dim, scale);
    return geometry::DynamicalSystem(std::move(space), std::move(form),
                                     h.as_field("h"));
  }

  geometry::ScalarField field(const std::string& text) const {
    return tempo::expr::Expression::parse(text, coordinates_).as_field(text);
  }

  tempo::clockwork::CandidateObservable candidate(const std::string& text) const {
    return tempo::clockwork::CandidateObservable{field(text), text};
  }

  std::vector<std::string> coordinates_;
  geometry::DynamicalSystem system_;
  tempo::flow::IntegratorConfig config_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "timelessness toolkit: Hamiltonian clocks, obstructions, and the "
            "projective quantum geometry";
  m.attr("__version__") = tempo::kVersion;

  py::register_exception<tempo::Error>(m, "Error");

  m.def("list_examples", []() {
    py::list out;
    for (const auto& e : tempo::scenario::builtin_examples()) {
      py::dict d;
      d["name"] = e.name;
      d["description"] = e.description;
      out.append(std::move(d));
    }
    return out;
  });

  m.def(
      "load_scenario",
      [](const std::string& ref) {
        std::string source;
        return from_json(tempo::scenario::load_scenario(ref, &source));
      },
      py::arg("ref"), "Load a builtin example by name or a scenario JSON file.");

  m.def(
      "run_scenario",
      [](const py::object& scenario, std::optional<std::uint64_t> seed,
         std::optional<double> tol, std::optional<double> horizon,
         const std::string& out_dir) {
        std::string source = "inline";
        nlohmann::json doc;
        if (py::isinstance<py::str>(scenario)) {
          doc = tempo::scenario::load_scenario(py::cast<std::string>(scenario),
                                               &source);
        } else {
          doc = to_json(scenario);
        }
        tempo::scenario::RunOptions options;
        options.seed = seed;
        options.tol = tol;
        options.horizon = horizon;
        options.out_dir = out_dir;
        const auto result = tempo::scenario::run_scenario(doc, options, source);
        py::dict d;
        d["report"] = from_json(result.report);
        d["all_passed"] = result.all_passed;
        d["exit_code"] = result.exit_code();
        d["written_files"] = result.written_files;
        return d;
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("tol") = py::none(),
      py::arg("horizon") = py::none(), py::arg("out_dir") = "",
      "Run a scenario given as a builtin name, a file path, or a dict.");

  py::class_<PyClassicalSystem>(m, "ClassicalSystem")
      .def(py::init<std::vector<std::string>, const std::string&,
                    const std::vector<std::string>&, double>(),
           py::arg("coordinates"), py::arg("hamiltonian"),
           py::arg("domain") = std::vector<std::string>{}, py::arg("scale") = 1.0)
      .def_property_readonly("dim", &PyClassicalSystem::dim)
      .def_property_readonly("coordinates", &PyClassicalSystem::coordinates)
      .def("hamiltonian", &PyClassicalSystem::hamiltonian, py::arg("x"))
      .def("bracket", &PyClassicalSystem::bracket, py::arg("f"), py::arg("g"),
           py::arg("x"), "Poisson bracket {f, g} at x.")
      .def("hamiltonian_field", &PyClassicalSystem::hamiltonian_field, py::arg("x"))
      .def("integrate", &PyClassicalSystem::integrate, py::arg("x0"), py::arg("span"),
           py::arg("generator") = py::none())
      .def("escape_time", &PyClassicalSystem::escape_time, py::arg("x0"),
           py::arg("generator") = py::none(), py::arg("horizon") = 100.0)
      .def("verify_timeliness", &PyClassicalSystem::verify_timeliness, py::arg("tau"),
           py::arg("states"), py::arg("grid"), py::arg("tol") = 1e-6)
      .def("verify_local_timeliness", &PyClassicalSystem::verify_local_timeliness,
           py::arg("tau"), py::arg("states"), py::arg("tol") = 1e-6)
      .def("recurrence", &PyClassicalSystem::recurrence, py::arg("x0"),
           py::arg("horizon") = 100.0, py::arg("eps") = 1e-6);

  py::class_<tempo::kahler::QuantumSystem>(m, "QuantumSystem")
      .def(py::init([](const CMat& h) {
             return tempo::kahler::QuantumSystem(static_cast<int>(h.rows()), h);
           }),
           py::arg("hamiltonian"))
      .def_readonly("dim", &tempo::kahler::QuantumSystem::dim)
      .def_readonly("hamiltonian", &tempo::kahler::QuantumSystem::hamiltonian)
      .def(
          "projective_flow",
          [](const tempo::kahler::QuantumSystem& qs, const CMat& generator,
             const CVec& psi0, const std::vector<double>& grid) {
            const auto obs =
                tempo::kahler::ObservableFunction::expectation(generator, "F");
            const auto start = tempo::kahler::ProjectivePoint::from(psi0);
            const auto flow = tempo::kahler::projective_flow_sampled(
                qs, obs, start, grid, tempo::flow::IntegratorConfig{});
            py::dict d;
            d["s"] = flow.parameters;
            py::list states;
            for (const auto& p : flow.states) states.append(p.representative());
            d["states"] = std::move(states);
            d["outcome"] = outcome_dict(flow.outcome);
            return d;
          },
          py::arg("generator"), py::arg("psi0"), py::arg("grid"),
          "Flow of the expectation function of `generator` on projective space, "
          "sampled exactly at the grid nodes.")
      .def(
          "pauli_demo",
          [](const tempo::kahler::QuantumSystem& qs, double tol,
             int random_candidates, std::uint64_t seed) {
            using tempo::kahler::ObservableFunction;
            std::vector<ObservableFunction> candidates;
            const auto basis = tempo::kahler::pauli_like_basis(qs.dim);
            for (std::size_t i = 0; i < basis.size(); ++i) {
              candidates.push_back(ObservableFunction::expectation(
                  basis[i], "pauli_" + std::to_string(i + 1)));
            }
            candidates.push_back(ObservableFunction::expectation(
                CMat::Identity(qs.dim, qs.dim), "identity"));
            tempo::Rng rng(seed);
            for (int i = 0; i < random_candidates; ++i) {
              candidates.push_back(ObservableFunction::expectation(
                  tempo::kahler::random_hermitian(qs.dim, rng),
                  "random_" + std::to_string(i + 1)));
            }
            tempo::kahler::PauliDemoConfig cfg;
            cfg.seed = seed;
            const auto report =
                tempo::kahler::pauli_obstruction_demo(qs, candidates, tol, cfg);
            py::dict d;
            d["pass"] = report.pass;
            d["tolerance"] = report.tolerance;
            d["recurrence_T"] = report.recurrence_T;
            d["recurrence_distance"] = report.recurrence_distance;
            py::list rows;
            for (const auto& row : report.candidates) {
              py::dict r;
              r["label"] = row.label;
              r["bracket_deviation"] = row.bracket_deviation;
              r["timeliness_deviation"] = row.timeliness_deviation;
              r["return_deviation"] = row.return_deviation;
              r["failed"] = row.failed;
              rows.append(std::move(r));
            }
            d["candidates"] = std::move(rows);
            return d;
          },
          py::arg("tol") = 1e-3, py::arg("random_candidates") = 10,
          py::arg("seed") = 0,
          "Show that no Pauli-type candidate stays timely through a recurrence.");

  m.def("evolve_exact", &tempo::kahler::evolve_exact, py::arg("generator"),
        py::arg("psi"), py::arg("s"),
        "Spectral solution psi(s) = exp(-i s F) psi of the linear flow.");

  m.def(
      "projective_distance",
      [](const CVec& a, const CVec& b) {
        return tempo::kahler::projective_distance(a, b);
      },
      py::arg("a"), py::arg("b"),
      "Phase-aligned distance between rays through a and b.");

  m.def(
      "killing_residual",
      [](const CMat& generator, const CVec& psi, const std::string& kind,
         int tangent_samples, std::uint64_t seed) {
        using tempo::kahler::ObservableFunction;
        const ObservableFunction obs =
            kind == "expectation"
                ? ObservableFunction::expectation(generator, "F")
                : ObservableFunction::weinberg_square(generator, "square(F)");
        return tempo::kahler::killing_residual(
            obs, tempo::kahler::ProjectivePoint::from(psi), tangent_samples, 1e-4,
            seed);
      },
      py::arg("generator"), py::arg("psi"), py::arg("kind") = "expectation",
      py::arg("tangent_samples") = 4, py::arg("seed") = 0,
      "First-order change of the metric under the realized flow; ~0 exactly "
      "for expectation functions (kind=\"expectation\" or \"weinberg\").");

  m.def(
      "kahler_identity_residuals",
      [](int dim, int samples, std::uint64_t seed) {
        const auto r = tempo::kahler::kahler_identity_residuals(dim, samples, seed);
        py::dict d;
        d["compatibility"] = r.compatibility;
        d["j_invariance_g"] = r.j_invariance_g;
        d["j_invariance_omega"] = r.j_invariance_omega;
        d["phase_invariance"] = r.phase_invariance;
        d["max"] = r.max();
        return d;
      },
      py::arg("dim"), py::arg("samples") = 100, py::arg("seed") = 0,
      "Monte Carlo residuals of the metric/symplectic/complex compatibility "
      "identities on the projective space of the given dimension.");

  m.def("pauli_like_basis", &tempo::kahler::pauli_like_basis, py::arg("dim"),
        "Traceless Hermitian basis generalizing the Pauli matrices.");
}
