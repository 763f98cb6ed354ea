"""Smoke test for the tempo Python bindings (plain asserts, no framework)."""

import math

import numpy as np

import tempo


def close(a, b, tol):
    return abs(a - b) <= tol


# Module surface.
assert tempo.__version__
examples = tempo.list_examples()
assert len(examples) >= 6
names = {e["name"] for e in examples}
assert "pendulum" in names and "qubit_pauli_demo" in names

doc = tempo.load_scenario("pendulum")
assert doc["system"]["hamiltonian"] == "p^2 / 2 - cos(q)"

# Classical system: free particle on the upper half-plane.
sys = tempo.ClassicalSystem(["q", "p"], "p^2 / 2", domain=["p"])
assert sys.dim == 2
assert close(sys.hamiltonian([0.0, 2.0]), 2.0, 1e-15)
assert close(sys.bracket("p^2 / 2", "q / p", [0.0, 1.0]), 1.0, 1e-12)
field = sys.hamiltonian_field([0.0, 2.0])
assert close(field[0], 2.0, 1e-12) and close(field[1], 0.0, 1e-12)

run = sys.integrate([0.0, 1.0], (0.0, 2.0))
assert run["outcome"]["verdict"] == "Completed"
assert close(run["states"][-1][0], 2.0, 1e-9)

grid = [0.5 * i for i in range(11)]
rep = sys.verify_timeliness("q / p", [[0.0, 1.0], [1.0, 2.0]], grid)
assert rep["pass"] and all(r["max_deviation"] <= 1e-9 for r in rep["per_trajectory"])
assert sys.verify_local_timeliness("q / p", [[0.3, 0.7]])["pass"]

esc = sys.escape_time([0.0, 1.0], generator="q / p", horizon=10.0)
assert esc is not None and close(esc, 0.5, 1e-3)
assert sys.recurrence([0.0, 1.0], horizon=20.0) is None

osc = tempo.ClassicalSystem(["q", "p"], "(q^2 + p^2) / 2")
rec = osc.recurrence([1.0, 0.0], horizon=10.0, eps=1e-4)
assert rec is not None and close(rec["T"], 2.0 * math.pi, 1e-5)

# Quantum system: qubit with H = diag(0, 1).
h = np.diag([0.0, 1.0]).astype(complex)
qs = tempo.QuantumSystem(h)
assert qs.dim == 2

psi0 = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
flow = qs.projective_flow(h, psi0, [0.0, 1.0, 2.0, 4.0])
assert flow["outcome"]["verdict"] == "Completed"
worst = max(
    tempo.projective_distance(state, tempo.evolve_exact(h, psi0, s))
    for s, state in zip(flow["s"], flow["states"])
)
assert worst <= 1e-8

assert tempo.kahler_identity_residuals(2)["max"] <= 1e-12
assert tempo.killing_residual(h, psi0) <= 1e-5
assert tempo.killing_residual(h, psi0, kind="weinberg_square") >= 1e-3

basis = tempo.pauli_like_basis(2)
assert len(basis) == 3
assert np.allclose(basis[0], np.array([[0, 1], [1, 0]], dtype=complex))

demo = qs.pauli_demo(seed=7)
assert demo["pass"] and close(demo["recurrence_T"], 2.0 * math.pi, 1e-5)
assert all(row["failed"] for row in demo["candidates"])

# Scenario runner on an inline document.
result = tempo.run_scenario(
    {
        "name": "smoke",
        "seed": 12,
        "system": {
            "type": "classical",
            "coordinates": ["q", "p"],
            "hamiltonian": "p^2 / 2",
            "domain": ["p"],
        },
        "checks": [
            {
                "type": "local_timeliness",
                "tau": "q / p",
                "states": {"count": 5, "box": [[-1.0, 1.0], [0.5, 2.0]]},
                "tol": 1e-9,
            }
        ],
    }
)
assert result["all_passed"] and result["exit_code"] == 0
assert result["report"]["checks"][0]["verdict"] == "pass"

failing = tempo.run_scenario("harmonic_oscillator")
assert not failing["all_passed"] and failing["exit_code"] == 1

try:
    tempo.run_scenario({"name": "broken", "system": {"type": "classical"}, "checks": []})
    raise AssertionError("expected tempo.Error for an incomplete system")
except tempo.Error:
    pass

print("OK")
