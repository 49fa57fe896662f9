"""Small-dimension complex Hermitian matrix algebra.

Carrier type for conditional states, witness blocks, and observables.
Eigenvalues of 2x2 matrices use the trace/determinant closed form; larger
dimensions (up to 8) go through cyclic Jacobi sweeps, so no external
eigensolver is required by the public operations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL
from .errors import DimensionMismatchError, StateValidationError

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)  # |0><0|
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)  # |1><1|

_MAX_JACOBI_SWEEPS = 60


def _as_hermitian(entries, parse_tol: float = 1e-10) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > parse_tol * scale:
        raise StateValidationError("matrix is not Hermitian within parsing tolerance")
    out = 0.5 * (m + m.conj().T)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class HermitianOperator:
    """Immutable d x d complex Hermitian matrix value."""

    mat: np.ndarray = field(repr=False)

    def __init__(self, entries):
        object.__setattr__(self, "mat", _as_hermitian(entries))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.mat)))

    def __eq__(self, other) -> bool:
        return isinstance(other, HermitianOperator) and np.array_equal(self.mat, other.mat)

    def __hash__(self):
        return hash(self.mat.tobytes())


def pauli_decompose(m: HermitianOperator | np.ndarray) -> tuple[float, float, float, float]:
    """Coefficients (c_I, c_X, c_Y, c_Z) with m = c_I*I + c_X*X + c_Y*Y + c_Z*Z."""
    a = m.mat if isinstance(m, HermitianOperator) else _as_hermitian(m)
    if a.shape[0] != 2:
        raise DimensionMismatchError("Pauli decomposition is defined for dim 2 only")
    c_i = 0.5 * float(np.real(a[0, 0] + a[1, 1]))
    c_z = 0.5 * float(np.real(a[0, 0] - a[1, 1]))
    c_x = float(np.real(a[0, 1]))
    c_y = float(-np.imag(a[0, 1]))
    return (c_i, c_x, c_y, c_z)


def pauli_compose(c_i: float, c_x: float, c_y: float, c_z: float) -> np.ndarray:
    return c_i * PAULI_I + c_x * PAULI_X + c_y * PAULI_Y + c_z * PAULI_Z


def jacobi_eigh(mat: np.ndarray, tol: float = DEFAULT_TOL.jacobi) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix by cyclic Jacobi.

    Adequate for dim <= 8; sweeps stop once every off-diagonal magnitude is
    below tol times the matrix scale.
    """
    a = np.array(mat, dtype=complex)
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    scale = max(1.0, float(np.abs(a).max()))
    for _ in range(_MAX_JACOBI_SWEEPS):
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                mag = abs(apq)
                off = max(off, mag)
                if mag <= tol * scale:
                    continue
                phase = apq / mag
                app = float(np.real(a[p, p]))
                aqq = float(np.real(a[q, q]))
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau)) if tau != 0.0 else 1.0
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                # plane rotation on columns p,q with the phase absorbed in q
                jp = np.array([c, -s * np.conj(phase)], dtype=complex)
                jq = np.array([s * phase, c], dtype=complex)
                cols = a[:, [p, q]].copy()
                a[:, p] = cols @ np.array([jp[0], jp[1]])
                a[:, q] = cols @ np.array([jq[0], jq[1]])
                rows = a[[p, q], :].copy()
                a[p, :] = np.conj(jp[0]) * rows[0] + np.conj(jp[1]) * rows[1]
                a[q, :] = np.conj(jq[0]) * rows[0] + np.conj(jq[1]) * rows[1]
                vc = v[:, [p, q]].copy()
                v[:, p] = vc @ np.array([jp[0], jp[1]])
                v[:, q] = vc @ np.array([jq[0], jq[1]])
        if off <= tol * scale:
            break
    vals = np.real(np.diag(a))
    order = np.argsort(vals)
    return vals[order], v[:, order]


def min_eigenvalue(m: HermitianOperator | np.ndarray) -> float:
    """Smallest eigenvalue; closed form for dim <= 2, Jacobi above."""
    a = m.mat if isinstance(m, HermitianOperator) else _as_hermitian(m)
    d = a.shape[0]
    if d == 1:
        return float(np.real(a[0, 0]))
    if d == 2:
        tr = float(np.real(a[0, 0] + a[1, 1]))
        det = float(np.real(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]))
        disc = max(tr * tr - 4.0 * det, 0.0)
        return 0.5 * (tr - math.sqrt(disc))
    vals, _ = jacobi_eigh(a)
    return float(vals[0])


def _check_state(a: np.ndarray, tol: float) -> None:
    if abs(np.real(np.trace(a)) - 1.0) > tol:
        raise StateValidationError("state is not unit trace within tolerance")
    if min_eigenvalue(a) < -tol:
        raise StateValidationError("state is not positive semidefinite within tolerance")


def state_fidelity(r1, r2, tol: float = 1e-9) -> float:
    """Uhlmann fidelity F = (Tr sqrt(sqrt(r1) r2 sqrt(r1)))^2 between density matrices.

    dim 2 uses F = Tr(r1 r2) + 2 sqrt(det r1 det r2).
    """
    a = r1.mat if isinstance(r1, HermitianOperator) else _as_hermitian(r1)
    b = r2.mat if isinstance(r2, HermitianOperator) else _as_hermitian(r2)
    if a.shape != b.shape:
        raise DimensionMismatchError("states have different dimensions")
    _check_state(a, tol)
    _check_state(b, tol)
    if a.shape[0] == 2:
        det_a = max(float(np.real(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])), 0.0)
        det_b = max(float(np.real(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])), 0.0)
        f = float(np.real(np.trace(a @ b))) + 2.0 * math.sqrt(det_a * det_b)
    else:
        vals, vecs = jacobi_eigh(a)
        sq = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
        inner = sq @ b @ sq
        ivals, _ = jacobi_eigh(0.5 * (inner + inner.conj().T))
        f = float(np.sum(np.sqrt(np.clip(ivals, 0.0, None)))) ** 2
    return min(max(f, 0.0), 1.0)


def matrix_to_json(mat: np.ndarray) -> dict:
    """Row-major {"re": ..., "im": ...} encoding of a complex matrix."""
    a = np.asarray(mat, dtype=complex)
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError(f"bad matrix payload: {exc}") from exc
    if re.shape != im.shape:
        raise StateValidationError("re/im shapes differ")
    return re + 1j * im
