"""Timelessness toolkit: Hamiltonian clocks, their obstructions, and the
projective geometry of quantum evolution.

The heavy lifting lives in the compiled extension ``tempo._core``; this
package re-exports its public surface.
"""

from ._core import (
    ClassicalSystem,
    Error,
    QuantumSystem,
    __version__,
    evolve_exact,
    kahler_identity_residuals,
    killing_residual,
    list_examples,
    load_scenario,
    pauli_like_basis,
    projective_distance,
    run_scenario,
)

__all__ = [
    "ClassicalSystem",
    "Error",
    "QuantumSystem",
    "__version__",
    "evolve_exact",
    "kahler_identity_residuals",
    "killing_residual",
    "list_examples",
    "load_scenario",
    "pauli_like_basis",
    "projective_distance",
    "run_scenario",
]
