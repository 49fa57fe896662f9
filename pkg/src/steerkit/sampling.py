"""Seeded random generators for assemblages, behaviors, states, and members.

Used by the property tests and the witness soundness checks; everything takes
an explicit numpy Generator so studies stay bit-reproducible.
"""
from __future__ import annotations

import numpy as np

from .correlations import Assemblage, Behavior, Scenario
from .membership import ModelClass, Strategy, enumerate_strategies


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Full-rank density matrix from a complex Ginibre square."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.real(np.trace(rho))


def random_unitary_from_rotations(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Unitary composed of random two-plane rotations with random phases."""
    u = np.eye(dim, dtype=complex)
    for i in range(dim):
        for j in range(i + 1, dim):
            theta = rng.uniform(0, 2 * np.pi)
            phi = rng.uniform(0, 2 * np.pi)
            r = np.eye(dim, dtype=complex)
            r[i, i] = np.cos(theta)
            r[j, j] = np.cos(theta)
            r[i, j] = np.sin(theta) * np.exp(1j * phi)
            r[j, i] = -np.sin(theta) * np.exp(-1j * phi)
            u = u @ r
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=dim))
    return u * phases


def random_projective_measurement(rng: np.random.Generator, dim: int = 2) -> list[np.ndarray]:
    u = random_unitary_from_rotations(rng, dim)
    return [np.outer(u[:, k], u[:, k].conj()) for k in range(dim)]


def _partial_trace_keep_last(mat: np.ndarray, n_qubits: int) -> np.ndarray:
    """Trace out all qubits except the last of an n-qubit operator."""
    dim_rest = 2 ** (n_qubits - 1)
    out = np.zeros((2, 2), dtype=complex)
    for k in (0, 1):
        for l in (0, 1):
            out[k, l] = sum(mat[2 * i + k, 2 * i + l] for i in range(dim_rest))
    return out


def random_quantum_assemblage(rng: np.random.Generator, n_untrusted: int = 2) -> Assemblage:
    """Assemblage from a random multiqubit state under random projective boxes.

    Always valid (PSD + no-signaling) by construction.
    """
    n_qubits = n_untrusted + 1
    dim = 2 ** n_qubits
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho /= np.real(np.trace(rho))
    meas = [[random_projective_measurement(rng) for _ in range(2)] for _ in range(n_untrusted)]
    sc = Scenario(n_untrusted, (2,) * n_untrusted, (2,) * n_untrusted, 2)
    elements = {}
    for x in sc.input_tuples():
        for a in sc.outcome_tuples():
            op = np.eye(1, dtype=complex)
            for party in range(n_untrusted):
                op = np.kron(op, meas[party][x[party]][a[party]])
            op = np.kron(op, np.eye(2))
            elements[(a, x)] = _partial_trace_keep_last(op @ rho, n_qubits)
    return Assemblage(sc, elements)


def _mixture(scenario: Scenario, terms) -> Assemblage:
    d = scenario.trusted_dim
    elements = {key: np.zeros((d, d), dtype=complex) for key in scenario.element_keys()}
    for weight, strat, rho in terms:
        for (a, x), p in strat.table.items():
            elements[(a, x)] = elements[(a, x)] + weight * p * rho
    return Assemblage(scenario, elements)


def _local_strategy(f, g) -> Strategy:
    table = {((f[x], g[y]), (x, y)): 1.0 for x in (0, 1) for y in (0, 1)}
    return Strategy(f"local:{f}:{g}", table)


def random_class_member(rng: np.random.Generator, model_class: ModelClass,
                        n_terms: int | None = None) -> Assemblage:
    """Random valid member of the class: a no-signaling mixture of strategies.

    Strategies with hidden signaling enter in flipped pairs sharing one weight
    and state, which cancels the signaling at the observable level while
    keeping each pair member inside the class's strategy set.
    """
    sc = model_class.scenario
    tag = model_class.tag
    d = sc.trusted_dim
    if tag == "ns-lhs" or sc.n_untrusted == 1:
        strategies = enumerate_strategies(model_class)
        count = n_terms or min(len(strategies), 12)
        picks = rng.choice(len(strategies), size=count, replace=False)
        weights = rng.dirichlet(np.ones(count))
        return _mixture(sc, [
            (w, strategies[i], random_state(rng, d)) for w, i in zip(weights, picks)
        ])
    if sc.inputs_per_party != (2, 2) or sc.outputs_per_party != (2, 2):
        raise ValueError("member sampling implemented for two binary boxes")
    count = n_terms or 8
    terms = []
    kinds = {
        "lhs": ("local", "a-pair", "b-pair"),
        "to-ab": ("local", "b-pair"),
        "to-ba": ("local", "a-pair"),
        "to-lhs": ("local",),
    }[tag]
    raw_w = rng.dirichlet(np.ones(count))
    for w in raw_w:
        kind = kinds[rng.integers(len(kinds))]
        rho = random_state(rng, d)
        if kind == "local":
            f = tuple(rng.integers(2, size=2))
            g = tuple(rng.integers(2, size=2))
            terms.append((w, _local_strategy(f, g), rho))
            continue
        if kind == "b-pair":
            # a = f(x); b responds to both inputs, paired with its x-flip
            f = tuple(rng.integers(2, size=2))
            g = tuple(rng.integers(2, size=4))  # g[(x, y)] indexed 2x + y
            for gg in (g, (g[2], g[3], g[0], g[1])):
                table = {
                    ((f[x], gg[2 * x + y]), (x, y)): 1.0 for x in (0, 1) for y in (0, 1)
                }
                terms.append((w / 2, Strategy(f"pairb:{f}:{gg}", table), rho))
        else:
            # b = g(y); a responds to both inputs, paired with its y-flip
            g = tuple(rng.integers(2, size=2))
            f = tuple(rng.integers(2, size=4))  # f[(x, y)] indexed 2x + y
            for ff in (f, (f[1], f[0], f[3], f[2])):
                table = {
                    ((ff[2 * x + y], g[y]), (x, y)): 1.0 for x in (0, 1) for y in (0, 1)
                }
                terms.append((w / 2, Strategy(f"paira:{ff}:{g}", table), rho))
    return _mixture(sc, terms)


def random_behavior(rng: np.random.Generator, scenario: Scenario) -> Behavior:
    """No-signaling behavior from a random quantum realization (projective boxes)."""
    n = scenario.n_untrusted
    dim = 2 ** n
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho /= np.real(np.trace(rho))
    meas = [
        [random_projective_measurement(rng) for _ in range(scenario.inputs_per_party[p])]
        for p in range(n)
    ]
    elements = {}
    for x in scenario.input_tuples():
        for a in scenario.outcome_tuples():
            op = np.eye(1, dtype=complex)
            for party in range(n):
                op = np.kron(op, meas[party][x[party]][a[party]])
            elements[(a, x)] = float(np.real(np.trace(op @ rho)))
    return Behavior(scenario, elements)


def random_one_box_assemblage(rng: np.random.Generator) -> Assemblage:
    """Binary one-box assemblage from a random two-qubit state."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.real(np.trace(rho))
    sc = Scenario(1, (2,), (2,), 2)
    elements = {}
    for x in (0, 1):
        projs = random_projective_measurement(rng)
        for a in (0, 1):
            op = np.kron(projs[a], np.eye(2))
            elements[((a,), (x,))] = _partial_trace_keep_last(op @ rho, 2)
    return Assemblage(sc, elements)
