"""Assemblages, behaviors, wirings, and their validity checks.

An assemblage maps (outcome-tuple, input-tuple) pairs of the untrusted boxes
to sub-normalized conditional states of the trusted party.  A behavior is the
fully device-independent analogue with scalar probabilities.  Wirings are
deterministic classical circuits on the untrusted side: boxes fire in a fixed
order, later inputs may depend on earlier outputs, and a final relabeling
compresses the outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    DimensionMismatchError,
    InputError,
    ScenarioMismatchError,
    StateValidationError,
    StructureError,
)
from .hermitian import min_eigenvalue, state_fidelity


def _index_tuples(cards: tuple[int, ...]):
    """Little-endian enumeration: the first slot varies fastest."""
    if not cards:
        yield ()
        return
    for idx in range(int(np.prod(cards))):
        out = []
        rem = idx
        for c in cards:
            out.append(rem % c)
            rem //= c
        yield tuple(out)


@dataclass(frozen=True)
class Scenario:
    """Number of untrusted boxes, their input/output cardinalities, trusted dimension.

    trusted_dim = 0 marks a pure behavior scenario (no trusted party).
    """

    n_untrusted: int
    inputs_per_party: tuple[int, ...]
    outputs_per_party: tuple[int, ...]
    trusted_dim: int

    def __post_init__(self):
        object.__setattr__(self, "inputs_per_party", tuple(int(c) for c in self.inputs_per_party))
        object.__setattr__(self, "outputs_per_party", tuple(int(c) for c in self.outputs_per_party))
        if self.n_untrusted < 1:
            raise InputError("scenario needs at least one untrusted party")
        if len(self.inputs_per_party) != self.n_untrusted or len(self.outputs_per_party) != self.n_untrusted:
            raise InputError("cardinality lists must match n_untrusted")
        if any(c < 1 for c in self.inputs_per_party + self.outputs_per_party):
            raise InputError("cardinalities must be >= 1")
        if self.trusted_dim < 0:
            raise InputError("trusted_dim must be >= 0")

    def input_tuples(self):
        return _index_tuples(self.inputs_per_party)

    def outcome_tuples(self):
        return _index_tuples(self.outputs_per_party)

    @property
    def n_inputs(self) -> int:
        return int(np.prod(self.inputs_per_party))

    @property
    def n_outcomes(self) -> int:
        return int(np.prod(self.outputs_per_party))

    def element_keys(self):
        """Canonical serialization order: inputs outer, outcomes inner."""
        for x in self.input_tuples():
            for a in self.outcome_tuples():
                yield (a, x)


def _promote_key(key) -> tuple:
    a, x = key
    return (tuple(int(v) for v in a), tuple(int(v) for v in x))


class Assemblage:
    """Map from (outcomes, inputs) to sub-normalized trusted-side operators."""

    def __init__(self, scenario: Scenario, elements: dict):
        if scenario.trusted_dim < 1:
            raise InputError("assemblages need trusted_dim >= 1")
        self.scenario = scenario
        store = {}
        for key, mat in elements.items():
            a, x = _promote_key(key)
            m = np.asarray(mat, dtype=complex)
            if m.shape != (scenario.trusted_dim, scenario.trusted_dim):
                raise DimensionMismatchError(
                    f"element {a}|{x} has shape {m.shape}, expected dim {scenario.trusted_dim}"
                )
            m = 0.5 * (m + m.conj().T)
            m.flags.writeable = False
            store[(a, x)] = m
        for key in scenario.element_keys():
            if key not in store:
                raise StructureError(f"missing assemblage element {key[0]}|{key[1]}")
        self.elements = store

    def element(self, a, x) -> np.ndarray:
        return self.elements[_promote_key((a, x))]

    def probability(self, a, x) -> float:
        return float(np.real(np.trace(self.element(a, x))))

    def conditional_state(self, a, x) -> np.ndarray:
        p = self.probability(a, x)
        if p <= 0.0:
            raise StateValidationError(f"element {a}|{x} has zero probability; no conditional state")
        return self.element(a, x) / p

    def reduced_state(self) -> np.ndarray:
        x0 = next(self.scenario.input_tuples())
        return sum(self.element(a, x0) for a in self.scenario.outcome_tuples())

    def map_elements(self, fn) -> "Assemblage":
        return Assemblage(self.scenario, {k: fn(k, m) for k, m in self.elements.items()})

    def __eq__(self, other):
        return (
            isinstance(other, Assemblage)
            and self.scenario == other.scenario
            and all(np.array_equal(self.elements[k], other.elements[k]) for k in self.elements)
        )

    def max_deviation(self, other: "Assemblage") -> float:
        if self.scenario != other.scenario:
            raise ScenarioMismatchError("assemblages live on different scenarios")
        return max(
            float(np.abs(self.elements[k] - other.elements[k]).max()) for k in self.elements
        )


class Behavior:
    """Conditional probability table over all parties (trusted_dim = 0)."""

    def __init__(self, scenario: Scenario, elements: dict):
        self.scenario = scenario
        store = {}
        for key, p in elements.items():
            a, x = _promote_key(key)
            store[(a, x)] = float(p)
        for key in scenario.element_keys():
            if key not in store:
                raise StructureError(f"missing behavior entry {key[0]}|{key[1]}")
        self.elements = store

    def probability(self, a, x) -> float:
        return self.elements[_promote_key((a, x))]

    def __eq__(self, other):
        return (
            isinstance(other, Behavior)
            and self.scenario == other.scenario
            and all(self.elements[k] == other.elements[k] for k in self.elements)
        )

    def max_deviation(self, other: "Behavior") -> float:
        if self.scenario != other.scenario:
            raise ScenarioMismatchError("behaviors live on different scenarios")
        return max(abs(self.elements[k] - other.elements[k]) for k in self.elements)


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    magnitude: float


@dataclass
class ValidationReport:
    valid: bool
    tolerance: float
    violations: list[Violation] = field(default_factory=list)

    def worst(self, kind: str | None = None) -> float:
        vals = [v.magnitude for v in self.violations if kind is None or v.kind == kind]
        return max(vals, default=0.0)


def _other_input_tuples(scenario: Scenario, party: int):
    """All input tuples grouped by the inputs of everyone except `party`."""
    cards = scenario.inputs_per_party
    rest = [c for i, c in enumerate(cards) if i != party]
    for rest_tuple in _index_tuples(tuple(rest)):
        group = []
        for xi in range(cards[party]):
            full = list(rest_tuple)
            full.insert(party, xi)
            group.append(tuple(full))
        yield group


def _marginal_over_party(obj, party: int, x: tuple):
    """Sum of elements over one party's outcome, keyed by the other outcomes."""
    scenario = obj.scenario
    outs = scenario.outputs_per_party
    rest_cards = tuple(c for i, c in enumerate(outs) if i != party)
    result = {}
    for rest in _index_tuples(rest_cards):
        total = None
        for ai in range(outs[party]):
            full = list(rest)
            full.insert(party, ai)
            val = obj.elements[(tuple(full), x)]
            total = val if total is None else total + val
        result[rest] = total
    return result


def validate(obj, tol: float | None = None, tolerances: Tolerances = DEFAULT_TOL) -> ValidationReport:
    """Check every invariant of an assemblage or behavior.

    Reports each violated invariant with its magnitude; the verdict is valid
    iff all magnitudes stay within the tolerance.  Structural incompleteness
    raises StructureError (at construction) rather than being reported here.
    """
    if isinstance(obj, Assemblage):
        return _validate_assemblage(obj, tolerances.validation if tol is None else tol)
    if isinstance(obj, Behavior):
        return _validate_behavior(obj, tolerances.validation if tol is None else tol, tolerances)
    raise InputError(f"cannot validate object of type {type(obj).__name__}")


def _validate_assemblage(asm: Assemblage, tol: float) -> ValidationReport:
    scenario = asm.scenario
    violations = []
    for (a, x), m in asm.elements.items():
        neg = -min_eigenvalue(m)
        if neg > tol:
            violations.append(Violation("psd", f"element {a}|{x}", neg))
    for x in scenario.input_tuples():
        total = sum(asm.probability(a, x) for a in scenario.outcome_tuples())
        mag = abs(total - 1.0)
        if mag > tol:
            violations.append(Violation("normalization", f"input {x}", mag))
    # no-signaling to the trusted party: the summed state is input-independent
    ref = None
    for x in scenario.input_tuples():
        tot = sum(asm.element(a, x) for a in scenario.outcome_tuples())
        if ref is None:
            ref = tot
            continue
        mag = float(np.abs(tot - ref).max())
        if mag > tol:
            violations.append(Violation("ns-trusted", f"input {x}", mag))
    # no-signaling among the untrusted boxes, one party at a time
    for party in range(scenario.n_untrusted):
        for group in _other_input_tuples(scenario, party):
            ref_marg = _marginal_over_party(asm, party, group[0])
            for x in group[1:]:
                marg = _marginal_over_party(asm, party, x)
                for rest, m in marg.items():
                    mag = float(np.abs(m - ref_marg[rest]).max())
                    if mag > tol:
                        violations.append(
                            Violation("ns-party", f"party {party}, outcomes {rest}, inputs {group[0]} vs {x}", mag)
                        )
    return ValidationReport(valid=not violations, tolerance=tol, violations=violations)


def _validate_behavior(beh: Behavior, tol: float, tolerances: Tolerances) -> ValidationReport:
    scenario = beh.scenario
    violations = []
    for (a, x), p in beh.elements.items():
        if p < -tol:
            violations.append(Violation("negativity", f"entry {a}|{x}", -p))
    for x in scenario.input_tuples():
        total = sum(beh.probability(a, x) for a in scenario.outcome_tuples())
        mag = abs(total - 1.0)
        if mag > tolerances.behavior_norm:
            violations.append(Violation("normalization", f"input {x}", mag))
    for party in range(scenario.n_untrusted):
        for group in _other_input_tuples(scenario, party):
            ref_marg = _marginal_over_party(beh, party, group[0])
            for x in group[1:]:
                marg = _marginal_over_party(beh, party, x)
                for rest, m in marg.items():
                    mag = abs(m - ref_marg[rest])
                    if mag > tol:
                        violations.append(
                            Violation("ns-party", f"party {party}, outcomes {rest}, inputs {group[0]} vs {x}", mag)
                        )
    return ValidationReport(valid=not violations, tolerance=tol, violations=violations)


class Wiring:
    """Deterministic bilocal circuit on the untrusted boxes.

    ordering    firing order of the original parties
    input_maps  per party, table (final input tuple, earlier outputs) -> input
    output_map  table from all original outputs -> final output tuple
    The final object has len(final_inputs) parties; a party's input may depend
    only on outputs of strictly earlier parties, which the table keying
    enforces by construction.
    """

    def __init__(
        self,
        n_parties: int,
        ordering: tuple[int, ...],
        input_maps: list[dict],
        output_map: dict,
        final_inputs: tuple[int, ...],
        final_outputs: tuple[int, ...],
        source_inputs: tuple[int, ...],
        source_outputs: tuple[int, ...],
    ):
        self.n_parties = n_parties
        self.ordering = tuple(ordering)
        self.final_inputs = tuple(final_inputs)
        self.final_outputs = tuple(final_outputs)
        self.source_inputs = tuple(source_inputs)
        self.source_outputs = tuple(source_outputs)
        if sorted(self.ordering) != list(range(n_parties)):
            raise InputError("ordering must be a permutation of the parties")
        if len(self.final_inputs) != len(self.final_outputs):
            raise InputError("final input and output slots must pair into parties")
        self.input_maps = [dict(m) for m in input_maps]
        self.output_map = {tuple(k): tuple(v) for k, v in output_map.items()}
        self._check_total()

    def _check_total(self):
        earlier_cards: list[tuple[int, ...]] = []
        seen: list[int] = []
        for party in self.ordering:
            cards = tuple(self.source_outputs[p] for p in seen)
            table = self.input_maps[party]
            for xf in _index_tuples(self.final_inputs):
                for eo in _index_tuples(cards):
                    if (xf, eo) not in table:
                        raise InputError(f"input map of party {party} missing entry ({xf}, {eo})")
                    val = table[(xf, eo)]
                    if not 0 <= val < self.source_inputs[party]:
                        raise InputError(f"input map of party {party} out of range")
            seen.append(party)
            earlier_cards.append(cards)
        for a in _index_tuples(self.source_outputs):
            if a not in self.output_map:
                raise InputError(f"output map missing entry {a}")
            b = self.output_map[a]
            if len(b) != len(self.final_outputs) or any(
                not 0 <= bi < c for bi, c in zip(b, self.final_outputs)
            ):
                raise InputError(f"output map value {b} out of range")

    def source_inputs_for(self, final_input: tuple, outputs: tuple) -> tuple:
        """Inputs each original box receives when all outputs are `outputs`."""
        u = [0] * self.n_parties
        fired: list[int] = []
        for party in self.ordering:
            earlier = tuple(outputs[p] for p in fired)
            u[party] = self.input_maps[party][(tuple(final_input), earlier)]
            fired.append(party)
        return tuple(u)

    @staticmethod
    def identity(scenario: Scenario) -> "Wiring":
        n = scenario.n_untrusted
        ins, outs = scenario.inputs_per_party, scenario.outputs_per_party
        input_maps = []
        for party in range(n):
            earlier = tuple(outs[p] for p in range(party))
            table = {}
            for xf in _index_tuples(ins):
                for eo in _index_tuples(earlier):
                    table[(xf, eo)] = xf[party]
            input_maps.append(table)
        output_map = {a: a for a in _index_tuples(outs)}
        return Wiring(n, tuple(range(n)), input_maps, output_map, ins, outs, ins, outs)

    @staticmethod
    def y_equals_a(scenario: Scenario) -> "Wiring":
        """The first two boxes collapse into one: box 1's input is box 0's output.

        Any further boxes pass through untouched, so the same constructor
        serves assemblages (two boxes) and tripartite behaviors.
        """
        n = scenario.n_untrusted
        if n < 2:
            raise InputError("the y=a wiring acts on at least two boxes")
        ins, outs = scenario.inputs_per_party, scenario.outputs_per_party
        if outs[0] > ins[1]:
            raise InputError("first box's outputs must fit the second box's inputs")
        final_ins = (ins[0],) + ins[2:]
        final_outs = (outs[1],) + outs[2:]
        input_maps = []
        for party in range(n):
            earlier = tuple(outs[p] for p in range(party))
            table = {}
            for xf in _index_tuples(final_ins):
                for eo in _index_tuples(earlier):
                    if party == 0:
                        table[(xf, eo)] = xf[0]
                    elif party == 1:
                        table[(xf, eo)] = eo[0]
                    else:
                        table[(xf, eo)] = xf[party - 1]
            input_maps.append(table)
        output_map = {a: (a[1],) + a[2:] for a in _index_tuples(outs)}
        return Wiring(n, tuple(range(n)), input_maps, output_map, final_ins, final_outs, ins, outs)


def _check_wiring_compat(scenario: Scenario, w: Wiring):
    if w.n_parties != scenario.n_untrusted:
        raise InputError("wiring party count does not match the scenario")
    if w.source_inputs != scenario.inputs_per_party or w.source_outputs != scenario.outputs_per_party:
        raise InputError("wiring arities do not match the scenario")


def wired_scenario(scenario: Scenario, w: Wiring) -> Scenario:
    return Scenario(
        n_untrusted=len(w.final_inputs),
        inputs_per_party=w.final_inputs,
        outputs_per_party=w.final_outputs,
        trusted_dim=scenario.trusted_dim,
    )


def apply_wiring(asm: Assemblage, w: Wiring) -> Assemblage:
    """Fire the boxes through the wiring and sum over relabeled outputs."""
    _check_wiring_compat(asm.scenario, w)
    out_sc = wired_scenario(asm.scenario, w)
    dim = asm.scenario.trusted_dim
    elements = {
        key: np.zeros((dim, dim), dtype=complex) for key in out_sc.element_keys()
    }
    for xf in out_sc.input_tuples():
        for a in asm.scenario.outcome_tuples():
            u = w.source_inputs_for(xf, a)
            bf = w.output_map[a]
            elements[(bf, xf)] = elements[(bf, xf)] + asm.element(a, u)
    return Assemblage(out_sc, elements)


def apply_wiring_behavior(beh: Behavior, w: Wiring) -> Behavior:
    _check_wiring_compat(beh.scenario, w)
    out_sc = wired_scenario(beh.scenario, w)
    elements = {key: 0.0 for key in out_sc.element_keys()}
    for xf in out_sc.input_tuples():
        for a in beh.scenario.outcome_tuples():
            u = w.source_inputs_for(xf, a)
            bf = w.output_map[a]
            elements[(bf, xf)] += beh.probability(a, u)
    return Behavior(out_sc, elements)


def check_povm(effects: list[np.ndarray], dim: int, tol: float = 1e-9) -> None:
    total = np.zeros((dim, dim), dtype=complex)
    for e in effects:
        m = np.asarray(e, dtype=complex)
        if m.shape != (dim, dim):
            raise DimensionMismatchError("POVM effect has the wrong dimension")
        if min_eigenvalue(0.5 * (m + m.conj().T)) < -tol:
            raise StateValidationError("POVM effect is not positive semidefinite")
        total = total + m
    if np.abs(total - np.eye(dim)).max() > tol:
        raise StateValidationError("POVM effects do not sum to the identity")


def behavior_from_assemblage(asm: Assemblage, trusted_measurements: list[list[np.ndarray]]) -> Behavior:
    """P(a..., c | x..., z) = Tr[sigma_{a|x} M_{c|z}] with the trusted party appended last."""
    dim = asm.scenario.trusted_dim
    n_out = {len(povm) for povm in trusted_measurements}
    if len(n_out) != 1:
        raise InputError("all trusted measurements need the same number of outcomes")
    for povm in trusted_measurements:
        check_povm(povm, dim)
    n_c = n_out.pop()
    sc = asm.scenario
    out_sc = Scenario(
        n_untrusted=sc.n_untrusted + 1,
        inputs_per_party=sc.inputs_per_party + (len(trusted_measurements),),
        outputs_per_party=sc.outputs_per_party + (n_c,),
        trusted_dim=0,
    )
    elements = {}
    for x in sc.input_tuples():
        for z, povm in enumerate(trusted_measurements):
            for a in sc.outcome_tuples():
                m = asm.element(a, x)
                for c, eff in enumerate(povm):
                    elements[(a + (c,), x + (z,))] = float(np.real(np.trace(m @ eff)))
    return Behavior(out_sc, elements)


def assemblage_fidelity(a1: Assemblage, a2: Assemblage, tolerances: Tolerances = DEFAULT_TOL) -> float:
    """Mean of trusted-state fidelities weighted by sqrt of the box probabilities.

    Equals 1 iff all elements agree; vanishes when all conditional states are
    orthogonal.  Terms where either probability vanishes contribute zero.
    """
    if a1.scenario != a2.scenario:
        raise ScenarioMismatchError("assemblage fidelity needs a common scenario")
    for a in (a1, a2):
        rep = validate(a, tolerances=tolerances)
        if not rep.valid:
            raise StateValidationError(f"invalid assemblage: worst violation {rep.worst():.3g}")
    n_x = a1.scenario.n_inputs
    total = 0.0
    for x in a1.scenario.input_tuples():
        for a in a1.scenario.outcome_tuples():
            p1 = max(a1.probability(a, x), 0.0)
            p2 = max(a2.probability(a, x), 0.0)
            if p1 <= 0.0 or p2 <= 0.0:
                continue
            f = state_fidelity(a1.element(a, x) / p1, a2.element(a, x) / p2, tol=1e-6)
            total += math.sqrt(p1 * p2) * f
    return total / n_x


def uniform_assemblage(scenario: Scenario) -> Assemblage:
    """Maximally mixed assemblage: uniform outcomes, maximally mixed states."""
    d = scenario.trusted_dim
    p = 1.0 / scenario.n_outcomes
    elem = {key: p * np.eye(d) / d for key in scenario.element_keys()}
    return Assemblage(scenario, elem)
