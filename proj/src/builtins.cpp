#include "tempo/scenario.hpp"

#include <array>

namespace tempo::scenario {

namespace {

struct BuiltinEntry {
  const char* name;
  const char* description;
  const char* document;
};

// Scenario documents are stored as the exact JSON text that `run` would read
// from disk, so builtins and user files share one code path.
constexpr const char* kFreeParticle = R"json({
  "name": "free_particle_halfplane",
  "seed": 20210607,
  "system": {
    "type": "classical",
    "coordinates": ["q", "p"],
    "hamiltonian": "p^2 / 2",
    "domain": ["p"]
  },
  "checks": [
    {
      "type": "timeliness",
      "label": "tau = q/p advances with the flow",
      "tau": "q / p",
      "states": {"count": 10, "box": [[-2, 2], [0.2, 5]]},
      "grid": {"from": 0, "to": 10, "nodes": 21},
      "tol": 1e-6
    },
    {
      "type": "local_timeliness",
      "label": "pointwise bracket {h, tau} = 1",
      "tau": "q / p",
      "states": {"count": 20, "box": [[-2, 2], [0.2, 5]]},
      "tol": 1e-9
    },
    {
      "type": "construct_clock",
      "label": "local clocks from transversal sections",
      "anchors": {"count": 5, "box": [[-1, 1], [0.5, 3]]},
      "radius": 0.4,
      "tol": 1e-6,
      "compare_tau": "q / p"
    },
    {
      "type": "uniqueness",
      "label": "two clocks differ by a constant of motion",
      "tau1": "q / p",
      "tau2": "q / p + p^2 / 2",
      "states": [[0, 1], [1, 2], [-0.5, 0.7]],
      "grid": {"from": 0, "to": 5, "nodes": 11},
      "tol": 1e-6
    },
    {
      "type": "energy_descent",
      "label": "h drops at unit rate along the tau-flow",
      "tau": "q / p",
      "state": [0, 1],
      "grid": {"from": 0, "to": 0.45, "nodes": 10},
      "tol": 1e-6,
      "slope_tol": 1e-6,
      "residual_tol": 1e-8
    },
    {
      "type": "incompleteness",
      "label": "tau-flow escapes before h(x0) - inf h",
      "tau": "q / p",
      "states": [[0, 1], [0.5, 0.8], [-1, 2]],
      "h_inf": 0,
      "margin": 1e-3
    },
    {
      "type": "recurrence",
      "label": "free motion never returns",
      "state": [0, 1],
      "horizon": 100,
      "eps": 1e-6,
      "expect_absent": true
    }
  ]
})json";

constexpr const char* kNorton = R"json({
  "name": "norton_weinberg",
  "seed": 11,
  "system": {
    "type": "classical",
    "coordinates": ["q", "p"],
    "hamiltonian": "exp(p)"
  },
  "checks": [
    {
      "type": "timeliness",
      "label": "tau = q e^{-p} advances with the flow",
      "tau": "q * exp(-p)",
      "states": {"count": 10, "box": [[-2, 2], [-1, 1]]},
      "grid": {"from": 0, "to": 10, "nodes": 21},
      "tol": 1e-6
    },
    {
      "type": "local_timeliness",
      "label": "pointwise bracket {h, tau} = 1",
      "tau": "q * exp(-p)",
      "states": {"count": 20, "box": [[-2, 2], [-1, 1]]},
      "tol": 1e-9
    },
    {
      "type": "energy_descent",
      "label": "h(s) = h(0) - s along the tau-flow",
      "tau": "q * exp(-p)",
      "state": [0, 0],
      "grid": {"from": 0, "to": 0.9, "nodes": 10},
      "tol": 1e-6,
      "slope_tol": 1e-6,
      "residual_tol": 1e-8
    },
    {
      "type": "incompleteness",
      "label": "tau-flow leaves the world in finite parameter",
      "tau": "q * exp(-p)",
      "states": [[0, 0], [1, 0.5], [-0.5, -0.3]],
      "h_inf": 0,
      "margin": 1e-3
    }
  ],
  "outputs": {
    "trajectories": [
      {
        "path": "norton_tau_flow.csv",
        "generator": {"tau": "q * exp(-p)"},
        "initial_state": [0, 0],
        "span": [0, 0.9]
      }
    ]
  }
})json";

constexpr const char* kHarmonic = R"json({
  "name": "harmonic_oscillator",
  "seed": 7,
  "system": {
    "type": "classical",
    "coordinates": ["q", "p"],
    "hamiltonian": "(q^2 + p^2) / 2"
  },
  "checks": [
    {
      "type": "timeliness",
      "label": "no candidate survives a full period (expected failure)",
      "tau": "q",
      "states": [[0, 1]],
      "grid": {"from": 0, "to": 6.283185307179586, "nodes": 9},
      "tol": 1e-6
    },
    {
      "type": "construct_clock",
      "label": "no clock at the stationary origin",
      "anchors": [[0, 0]],
      "radius": 0.3,
      "tol": 1e-6,
      "expect_error": "StationaryPoint"
    },
    {
      "type": "recurrence",
      "label": "orbit returns after one period",
      "state": [1, 0],
      "horizon": 20,
      "eps": 1e-6,
      "expect_T": 6.283185307179586,
      "T_tol": 1e-5
    }
  ]
})json";

constexpr const char* kPendulum = R"json({
  "name": "pendulum",
  "seed": 3,
  "system": {
    "type": "classical",
    "coordinates": ["q", "p"],
    "hamiltonian": "p^2 / 2 - cos(q)"
  },
  "checks": [
    {
      "type": "construct_clock",
      "label": "local clocks away from the stable equilibrium",
      "anchors": {"count": 10, "box": [[-2, 2], [0.3, 1.5]]},
      "radius": 0.35,
      "tol": 1e-6
    },
    {
      "type": "uniqueness",
      "label": "candidates differing by the energy drift together",
      "tau1": "q",
      "tau2": "q + p^2 / 2 - cos(q)",
      "states": [[1.0471975511965976, 0], [0.5, 0.9], [-0.4, 1.1]],
      "grid": {"from": -2, "to": 2, "nodes": 9},
      "tol": 1e-6
    },
    {
      "type": "recurrence",
      "label": "libration period at 60 degrees amplitude",
      "state": [1.0471975511965976, 0],
      "horizon": 20,
      "eps": 1e-6,
      "expect_T": 6.7430014192503844,
      "T_tol": 1e-3
    }
  ],
  "outputs": {
    "trajectories": [
      {
        "path": "pendulum_orbit.csv",
        "generator": "h",
        "initial_state": [1.0471975511965976, 0],
        "span": [0, 13.5]
      }
    ]
  }
})json";

constexpr const char* kQubit = R"json({
  "name": "qubit_pauli_demo",
  "seed": 5,
  "system": {
    "type": "quantum",
    "dim": 2,
    "matrix": [[0, 0], [0, 0], [0, 0], [1, 0]]
  },
  "checks": [
    {
      "type": "kahler_identities",
      "label": "metric, symplectic form, and J fit together",
      "samples": 100,
      "tol": 1e-12
    },
    {
      "type": "schrodinger",
      "label": "projective flow matches the unitary evolution",
      "count": 5,
      "grid": {"from": 0, "to": 10, "nodes": 11},
      "tol": 1e-8
    },
    {
      "type": "killing",
      "label": "expectation flows are isometries, Weinberg flows are not",
      "states": 2,
      "tangent_samples": 4,
      "killing_tol": 1e-5,
      "weinberg_tol": 1e-3,
      "norm_drift_tol": 1e-8
    },
    {
      "type": "recurrence",
      "label": "projective orbit closes after 2*pi",
      "horizon": 20,
      "eps": 1e-4,
      "expect_T": 6.283185307179586,
      "T_tol": 1e-5
    },
    {
      "type": "pauli_demo",
      "label": "no Pauli-type observable is timely through a recurrence",
      "tol": 1e-3,
      "expect_T": 6.283185307179586,
      "T_tol": 1e-5,
      "return_min": 1.0,
      "random_candidates": 10
    }
  ]
})json";

constexpr const char* kQutrit = R"json({
  "name": "qutrit_pauli_demo",
  "seed": 17,
  "system": {
    "type": "quantum",
    "dim": 3,
    "matrix": [[0, 0], [0, 0], [0, 0],
               [0, 0], [1, 0], [0, 0],
               [0, 0], [0, 0], [3, 0]]
  },
  "checks": [
    {
      "type": "kahler_identities",
      "label": "metric, symplectic form, and J fit together",
      "samples": 100,
      "tol": 1e-12
    },
    {
      "type": "schrodinger",
      "label": "projective flow matches the unitary evolution",
      "count": 5,
      "grid": {"from": 0, "to": 10, "nodes": 11},
      "tol": 1e-8
    },
    {
      "type": "killing",
      "label": "expectation flows are isometries, Weinberg flows are not",
      "states": 2,
      "tangent_samples": 4,
      "killing_tol": 1e-5,
      "weinberg_tol": 1e-3,
      "norm_drift_tol": 1e-8
    },
    {
      "type": "recurrence",
      "label": "projective orbit closes after 2*pi",
      "horizon": 20,
      "eps": 1e-4,
      "expect_T": 6.283185307179586,
      "T_tol": 1e-5
    },
    {
      "type": "pauli_demo",
      "label": "no Pauli-type observable is timely through a recurrence",
      "tol": 1e-3,
      "expect_T": 6.283185307179586,
      "T_tol": 1e-5,
      "return_min": 1.0,
      "random_candidates": 10
    }
  ]
})json";

constexpr std::array<BuiltinEntry, 6> kBuiltins = {{
    {"free_particle_halfplane",
     "Half-plane free particle: global clock q/p, descent, incompleteness",
     kFreeParticle},
    {"norton_weinberg",
     "Exponential Hamiltonian with clock q e^{-p}; finite-parameter escape",
     kNorton},
    {"harmonic_oscillator",
     "Periodic orbits obstruct clocks; expected-failure example (exits 1)",
     kHarmonic},
    {"pendulum", "Librating pendulum: local clocks, uniqueness, libration period",
     kPendulum},
    {"qubit_pauli_demo",
     "Qubit: Kahler identities, Schrodinger flow, Killing test, Pauli obstruction",
     kQubit},
    {"qutrit_pauli_demo",
     "Qutrit: Kahler identities, Schrodinger flow, Killing test, Pauli obstruction",
     kQutrit},
}};

}  // namespace

const std::vector<BuiltinExample>& builtin_examples() {
  static const std::vector<BuiltinExample> examples = [] {
    std::vector<BuiltinExample> out;
    for (const BuiltinEntry& e : kBuiltins) {
      out.push_back(BuiltinExample{e.name, e.description});
    }
    return out;
  }();
  return examples;
}

std::optional<nlohmann::json> builtin_document(const std::string& name) {
  for (const BuiltinEntry& e : kBuiltins) {
    if (name == e.name) return nlohmann::json::parse(e.document);
  }
  return std::nullopt;
}

}  // namespace tempo::scenario
