"""Central tolerance configuration.

Every certification verdict in the package cites one of these thresholds;
keeping them in a single record makes the guarantees auditable.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across modules.

    psd_slack        minimum eigenvalue allowed below zero for a PSD verdict
    equality         absolute tolerance for affine/equality residuals
    gap              duality-gap threshold for certified conic solutions
    validation       default absolute tolerance of assemblage/behavior checks
    behavior_norm    normalization tolerance for behaviors (tighter by design)
    experiment       looser validation tolerance for reconstructed data
    jacobi           off-diagonal target of the Jacobi eigenvalue sweeps
    rank             threshold of the rank-revealing equality preprocessing
    """

    psd_slack: float = 1e-9
    equality: float = 1e-8
    gap: float = 1e-7
    validation: float = 1e-8
    behavior_norm: float = 1e-10
    experiment: float = 1e-6
    jacobi: float = 1e-12
    rank: float = 1e-10

    def with_validation(self, tol: float) -> "Tolerances":
        return replace(self, validation=tol)


DEFAULT_TOL = Tolerances()
