"""Model-class membership, robustness, and witness extraction.

The hidden-state model hierarchy is decided by conic feasibility over finite
generating sets: deterministic response tables for the unrestricted and
time-ordered classes, plus PR-box vertices for the fully no-signaling class.
Feasible instances return an explicit decomposition; infeasible ones return a
dual (Farkas) witness normalized to a stated bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .conic import ConicProgram, ProgramBuilder as _PB, smat, solve, svec, verify_certificate
from .correlations import (
    Assemblage,
    Behavior,
    Scenario,
    _index_tuples,
    _other_input_tuples,
    validate,
)
from .errors import (
    InputError,
    MemberError,
    ScenarioMismatchError,
    SolverFailureError,
    UnsupportedClassError,
)
from .hermitian import min_eigenvalue

CLASS_TAGS = ("lhs", "to-ab", "to-ba", "to-lhs", "ns-lhs")
_MAX_STRATEGIES = 100_000


@dataclass(frozen=True)
class ModelClass:
    tag: str
    scenario: Scenario

    def __post_init__(self):
        if self.tag not in CLASS_TAGS:
            raise UnsupportedClassError(f"unknown model class {self.tag!r}")


class Strategy:
    """One generating lambda-behavior: a conditional probability table."""

    def __init__(self, label: str, table: dict):
        self.label = label
        self.table = {k: float(v) for k, v in table.items()}

    def prob(self, a: tuple, x: tuple) -> float:
        return self.table.get((a, x), 0.0)

    def __repr__(self):
        return f"Strategy({self.label})"


def _det_functions(n_in: int, n_out: int):
    """All functions {0..n_in-1} -> {0..n_out-1} as tuples."""
    return list(itertools.product(range(n_out), repeat=n_in))


def enumerate_strategies(model_class: ModelClass) -> list[Strategy]:
    """Finite generating set of lambda-behaviors for the class.

    lhs     all joint deterministic outcome functions of the full input tuple
    to-ab   first box ignores the second box's input: a = f(x), b = g(x, y)
    to-ba   mirrored
    ns-lhs  local deterministic points plus the PR-box vertices (binary only)
    """
    sc = model_class.scenario
    tag = model_class.tag
    if tag == "to-lhs":
        raise InputError("to-lhs is decided by the to-ab and to-ba programs jointly")
    if tag == "lhs":
        n_in, n_out = sc.n_inputs, sc.n_outcomes
        if n_out ** n_in > _MAX_STRATEGIES:
            raise UnsupportedClassError("deterministic strategy set too large")
        inputs = list(sc.input_tuples())
        outcomes = list(sc.outcome_tuples())
        strategies = []
        for assign in itertools.product(range(n_out), repeat=n_in):
            table = {(outcomes[assign[i]], x): 1.0 for i, x in enumerate(inputs)}
            strategies.append(Strategy(f"det:{assign}", table))
        return strategies
    if tag in ("to-ab", "to-ba"):
        if sc.n_untrusted != 2:
            raise UnsupportedClassError("time-ordered classes need two untrusted boxes")
        ins, outs = sc.inputs_per_party, sc.outputs_per_party
        first, second = (0, 1) if tag == "to-ab" else (1, 0)
        f_list = _det_functions(ins[first], outs[first])
        g_list = _det_functions(ins[0] * ins[1], outs[second])
        if len(f_list) * len(g_list) > _MAX_STRATEGIES:
            raise UnsupportedClassError("deterministic strategy set too large")
        strategies = []
        for f in f_list:
            for g in g_list:
                table = {}
                for x in range(ins[0]):
                    for y in range(ins[1]):
                        xy = (x, y)
                        first_in = xy[first]
                        out_first = f[first_in]
                        out_second = g[x + ins[0] * y]
                        ab = (out_first, out_second) if first == 0 else (out_second, out_first)
                        table[(ab, xy)] = 1.0
                strategies.append(Strategy(f"det:{tag}:{f}:{g}", table))
        return strategies
    # ns-lhs
    if sc.n_untrusted != 2 or sc.inputs_per_party != (2, 2) or sc.outputs_per_party != (2, 2):
        raise UnsupportedClassError("ns-lhs vertices are only tabulated for two binary boxes")
    strategies = []
    for f in _det_functions(2, 2):
        for g in _det_functions(2, 2):
            table = {((f[x], g[y]), (x, y)): 1.0 for x in (0, 1) for y in (0, 1)}
            strategies.append(Strategy(f"local:{f}:{g}", table))
    for alpha, beta, gamma in itertools.product((0, 1), repeat=3):
        table = {}
        for x in (0, 1):
            for y in (0, 1):
                for a in (0, 1):
                    b = a ^ (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma
                    table[((a, b), (x, y))] = 0.5
        strategies.append(Strategy(f"pr:{alpha}{beta}{gamma}", table))
    return strategies


@dataclass
class Decomposition:
    """Hidden-state model: weights, lambda-behaviors, trusted-side states."""

    scenario: Scenario
    weights: np.ndarray
    strategies: list[Strategy]
    states: list[np.ndarray]
    sigma_blocks: list[np.ndarray]  # unnormalized weight * state

    @staticmethod
    def from_blocks(scenario: Scenario, strategies, blocks, weight_floor: float = 1e-12):
        weights, kept, states, sigmas = [], [], [], []
        for strat, blk in zip(strategies, blocks):
            w = float(np.real(np.trace(blk)))
            if w < weight_floor:
                continue
            weights.append(w)
            kept.append(strat)
            states.append(blk / w)
            sigmas.append(blk)
        return Decomposition(scenario, np.asarray(weights), kept, states, sigmas)

    def recompose(self) -> Assemblage:
        d = self.scenario.trusted_dim
        elements = {key: np.zeros((d, d), dtype=complex) for key in self.scenario.element_keys()}
        for strat, sig in zip(self.strategies, self.sigma_blocks):
            for (a, x), p in strat.table.items():
                elements[(a, x)] = elements[(a, x)] + p * sig
        return Assemblage(self.scenario, elements)

    def max_recomposition_error(self, target: Assemblage) -> float:
        return self.recompose().max_deviation(target)

    def check(self, target: Assemblage, tolerances: Tolerances = DEFAULT_TOL) -> tuple[bool, dict]:
        weight_sum = float(self.weights.sum())
        worst_state = 0.0
        for st in self.states:
            worst_state = max(worst_state, -min_eigenvalue(st), abs(float(np.real(np.trace(st))) - 1.0))
        rec = self.max_recomposition_error(target)
        # the weight sum inherits the recomposition budget (it is its trace part)
        ok = abs(weight_sum - 1.0) <= 1e-7 and worst_state <= tolerances.validation and rec <= 1e-7
        return ok, {"weight_sum": weight_sum, "state_violation": worst_state, "recomposition": rec}


@dataclass
class WitnessCertificate:
    """Linear functional on assemblages with a certified bound on a model class.

    convention "unit-bound": class maximum equals `bound` (canonically 1).
    convention "interval":   class values lie in [lower_bound, bound] = [-1, 0].
    """

    scenario: Scenario
    class_tag: str
    blocks: dict
    bound: float
    value_on_target: float
    convention: str
    lower_bound: float | None = None

    def evaluate(self, asm: Assemblage) -> float:
        if asm.scenario.trusted_dim != self.scenario.trusted_dim or set(asm.elements) != set(self.blocks):
            raise ScenarioMismatchError("witness and assemblage shapes do not match")
        return float(
            sum(np.real(np.trace(self.blocks[k] @ asm.elements[k])) for k in self.blocks)
        )

    def strategy_images(self, strategies) -> list[np.ndarray]:
        """G_lambda = sum_(a,x) D_lambda(a|x) F_(a,x): the witness seen by each strategy."""
        d = self.scenario.trusted_dim
        images = []
        for strat in strategies:
            g = np.zeros((d, d), dtype=complex)
            for (a, x), p in strat.table.items():
                g = g + p * self.blocks[(a, x)]
            images.append(g)
        return images

    def verify_bound(self, strategies=None, tolerances: Tolerances = DEFAULT_TOL, use_solver: bool = True):
        """Maximize the witness over the generating strategies, one program per strategy."""
        if strategies is None:
            strategies = enumerate_strategies(ModelClass(self.class_tag, self.scenario))
        worst_hi = -math.inf
        worst_lo = math.inf
        for g in self.strategy_images(strategies):
            if use_solver:
                hi = _max_trace_product(g)
                lo = -_max_trace_product(-g)
            else:
                hi = float(np.linalg.eigvalsh(g).max())
                lo = float(np.linalg.eigvalsh(g).min())
            worst_hi = max(worst_hi, hi)
            worst_lo = min(worst_lo, lo)
        ok = worst_hi <= self.bound + 1e-7
        if self.lower_bound is not None:
            ok = ok and worst_lo >= self.lower_bound - 1e-7
        return ok, worst_hi, worst_lo


def _max_trace_product(g: np.ndarray) -> float:
    """max Tr[g rho] over density matrices, as a one-block conic program."""
    builder = _PB()
    blk = builder.add_block(g.shape[0])
    builder.set_objective("max", mat_terms=[(blk, g)])
    builder.add_eq(mat_terms=[(blk, np.eye(g.shape[0]))], rhs=1.0)
    sol = solve(builder.build())
    if sol.status != "optimal":
        raise SolverFailureError("witness verification subproblem failed", sol.residuals)
    return sol.objective_value


def evaluate_witness(witness: WitnessCertificate, asm: Assemblage) -> float:
    return witness.evaluate(asm)


@dataclass
class ModelReport:
    class_tag: str
    feasible: bool
    decomposition: Decomposition | None = None
    witness: WitnessCertificate | None = None
    sub_reports: dict = field(default_factory=dict)
    gap: float = math.nan
    certificate_verified: bool = False
    solver_status: str = ""
    recomposition_error: float = math.nan


def _membership_program(asm: Assemblage, strategies) -> ConicProgram:
    builder = _PB()
    d = asm.scenario.trusted_dim
    blocks = [builder.add_block(d) for _ in strategies]
    for key in asm.scenario.element_keys():
        a, x = key
        target = svec(asm.elements[key])
        for k in range(d * d):
            terms = [
                (blocks[lam], k, strat.prob(a, x))
                for lam, strat in enumerate(strategies)
                if strat.prob(a, x) != 0.0
            ]
            builder.add_eq(coord_terms=terms, rhs=target[k])
    return builder.build()


def _witness_from_farkas(asm, strategies, dual_eq, class_tag, convention) -> WitnessCertificate:
    """Turn a Farkas certificate of the membership program into a witness.

    The equality rows are ordered (element, coordinate); the multipliers
    therefore reassemble into one Hermitian block per assemblage element.
    """
    sc = asm.scenario
    d = sc.trusted_dim
    keys = list(sc.element_keys())
    raw = {}
    for i, key in enumerate(keys):
        raw[key] = smat(np.asarray(dual_eq[i * d * d : (i + 1) * d * d]), d)
    n_x = sc.n_inputs
    images = []
    for strat in strategies:
        g = np.zeros((d, d), dtype=complex)
        for (a, x), p in strat.table.items():
            g = g + p * raw[(a, x)]
        images.append(g)
    class_max = max(float(np.linalg.eigvalsh(g).max()) for g in images)
    class_min = min(float(np.linalg.eigvalsh(g).min()) for g in images)
    value_raw = float(sum(np.real(np.trace(raw[k] @ asm.elements[k])) for k in keys))
    if convention == "unit-bound":
        t = (1.0 - class_max) / n_x
        blocks = {k: raw[k] + t * np.eye(d) for k in keys}
        return WitnessCertificate(
            scenario=sc, class_tag=class_tag, blocks=blocks, bound=1.0,
            value_on_target=value_raw + 1.0 - class_max, convention="unit-bound",
        )
    t = -class_max / n_x
    spread = class_max - class_min
    scale = 1.0 / spread if spread > 1e-12 else 1.0
    blocks = {k: (raw[k] + t * np.eye(d)) * scale for k in keys}
    return WitnessCertificate(
        scenario=sc, class_tag=class_tag, blocks=blocks, bound=0.0, lower_bound=-1.0,
        value_on_target=(value_raw - class_max) * scale, convention="interval",
    )


def _single_class_membership(asm, model_class, tolerances, max_iter) -> ModelReport:
    strategies = enumerate_strategies(model_class)
    program = _membership_program(asm, strategies)
    sol = solve(program, tolerances, max_iter)
    if sol.status == "numerical-failure":
        raise SolverFailureError(f"membership({model_class.tag}) did not converge", sol.residuals)
    verified = verify_certificate(program, sol, tolerances)
    if sol.status == "optimal":
        dec = Decomposition.from_blocks(asm.scenario, strategies, sol.primal)
        return ModelReport(
            class_tag=model_class.tag, feasible=True, decomposition=dec,
            gap=sol.gap, certificate_verified=verified, solver_status=sol.status,
            recomposition_error=dec.max_recomposition_error(asm),
        )
    convention = "interval" if model_class.tag == "ns-lhs" else "unit-bound"
    wit = _witness_from_farkas(asm, strategies, sol.dual_eq, model_class.tag, convention)
    return ModelReport(
        class_tag=model_class.tag, feasible=False, witness=wit,
        gap=sol.gap, certificate_verified=verified, solver_status=sol.status,
    )


def membership(asm: Assemblage, model_class: ModelClass, tolerances: Tolerances = DEFAULT_TOL,
               max_iter: int = 200) -> ModelReport:
    """Decide class membership; feasible -> decomposition, infeasible -> witness.

    The to-lhs class runs one program per time order and is feasible only when
    both are; the report carries the per-order sub-verdicts.
    """
    rep = validate(asm, tolerances=tolerances)
    if not rep.valid:
        raise InputError(f"assemblage invalid (worst violation {rep.worst():.3g}); validate() it first")
    if model_class.scenario != asm.scenario:
        raise ScenarioMismatchError("model class bound to a different scenario")
    if model_class.tag != "to-lhs":
        return _single_class_membership(asm, model_class, tolerances, max_iter)
    sub = {
        tag: _single_class_membership(asm, ModelClass(tag, asm.scenario), tolerances, max_iter)
        for tag in ("to-ab", "to-ba")
    }
    feasible = sub["to-ab"].feasible and sub["to-ba"].feasible
    witness = None
    if not feasible:
        bad = "to-ab" if not sub["to-ab"].feasible else "to-ba"
        witness = sub[bad].witness
    return ModelReport(
        class_tag="to-lhs", feasible=feasible,
        decomposition=sub["to-ab"].decomposition if feasible else None,
        witness=witness, sub_reports=sub,
        gap=max(sub["to-ab"].gap, sub["to-ba"].gap),
        certificate_verified=sub["to-ab"].certificate_verified and sub["to-ba"].certificate_verified,
        solver_status="optimal" if feasible else "infeasible",
        recomposition_error=max(sub["to-ab"].recomposition_error, sub["to-ba"].recomposition_error)
        if feasible else math.nan,
    )


# ---------------------------------------------------------------------------
# robustness


def _add_noise_blocks(builder, asm, mode, r_block):
    """Noise term of the robustness mixture; returns coord terms per element and coordinate."""
    sc = asm.scenario
    d = sc.trusted_dim
    keys = list(sc.element_keys())
    if mode == "mixed":
        mixed = np.eye(d) / (d * sc.n_outcomes)
        vec = svec(mixed)
        return (
            {key: {k: [(r_block, 0, -vec[k])] for k in range(d * d)} for key in keys},
            None,
        )
    noise_blocks = {key: builder.add_block(d) for key in keys}
    # noise must itself be a valid assemblage scaled by r
    for party in range(sc.n_untrusted):
        for group in _other_input_tuples(sc, party):
            rest_cards = tuple(c for i, c in enumerate(sc.outputs_per_party) if i != party)
            for rest in _index_tuples(rest_cards):
                for x in group[1:]:
                    for k in range(d * d):
                        terms = []
                        for ai in range(sc.outputs_per_party[party]):
                            full = list(rest)
                            full.insert(party, ai)
                            terms.append((noise_blocks[(tuple(full), group[0])], k, 1.0))
                            terms.append((noise_blocks[(tuple(full), x)], k, -1.0))
                        builder.add_eq(coord_terms=terms, rhs=0.0)
    inputs = list(sc.input_tuples())
    for x in inputs[1:]:
        for k in range(d * d):
            terms = [(noise_blocks[(a, inputs[0])], k, 1.0) for a in sc.outcome_tuples()]
            terms += [(noise_blocks[(a, x)], k, -1.0) for a in sc.outcome_tuples()]
            builder.add_eq(coord_terms=terms, rhs=0.0)
    trace_terms = [(noise_blocks[(a, inputs[0])], i, 1.0) for a in sc.outcome_tuples() for i in range(d)]
    builder.add_eq(coord_terms=trace_terms + [(r_block, 0, -1.0)], rhs=0.0)
    coord_terms = {
        key: {k: [(noise_blocks[key], k, -1.0)] for k in range(d * d)} for key in keys
    }
    return coord_terms, noise_blocks


def _expansion_rows(builder, asm, strategies, noise_terms, rhs_shift=None):
    d = asm.scenario.trusted_dim
    blocks = [builder.add_block(d) for _ in strategies]
    for key in asm.scenario.element_keys():
        a, x = key
        target = svec(asm.elements[key])
        if rhs_shift is not None:
            target = target + rhs_shift[key]
        for k in range(d * d):
            terms = [
                (blocks[lam], k, strat.prob(a, x))
                for lam, strat in enumerate(strategies)
                if strat.prob(a, x) != 0.0
            ]
            terms += noise_terms[key][k]
            builder.add_eq(coord_terms=terms, rhs=target[k])
    return blocks


@dataclass
class RobustnessReport:
    value: float
    mode: str
    class_tag: str
    gap: float
    certificate_verified: bool


def _strategy_lists(model_class: ModelClass):
    if model_class.tag == "to-lhs":
        return [
            enumerate_strategies(ModelClass("to-ab", model_class.scenario)),
            enumerate_strategies(ModelClass("to-ba", model_class.scenario)),
        ]
    return [enumerate_strategies(model_class)]


def _feasible_at_noise(asm, model_class, noise, r_value, tolerances, max_iter):
    """Certified feasibility of (sigma + r*tau)/(1+r) in the class at fixed r."""
    sc = asm.scenario
    d = sc.trusted_dim
    builder = _PB()
    if noise == "mixed":
        mixed_vec = svec(np.eye(d) / (d * sc.n_outcomes))
        shift = {key: r_value * mixed_vec for key in sc.element_keys()}
        noise_terms = {key: {k: [] for k in range(d * d)} for key in sc.element_keys()}
    else:
        r_block = builder.add_block(1)
        builder.add_eq(coord_terms=[(r_block, 0, 1.0)], rhs=r_value)
        noise_terms, _ = _add_noise_blocks(builder, asm, "generalized", r_block)
        shift = None
    for strategies in _strategy_lists(model_class):
        _expansion_rows(builder, asm, strategies, noise_terms, rhs_shift=shift)
    program = builder.build()
    sol = solve(program, tolerances, max_iter)
    if sol.status == "numerical-failure":
        return None
    verified = verify_certificate(program, sol, tolerances)
    if not verified:
        return None
    return sol.status == "optimal"


def _robustness_bisect(asm, model_class, noise, tolerances, max_iter) -> RobustnessReport:
    """Fallback: certified bisection on the noise weight.

    Each query is a plain feasibility program, which stays well conditioned on
    both sides of the threshold where the direct optimization can stall.
    """
    lo, hi = 0.0, 1.0 / 64.0
    status = _feasible_at_noise(asm, model_class, noise, 0.0, tolerances, max_iter)
    if status is True:
        return RobustnessReport(0.0, noise, model_class.tag, 0.0, True)
    while hi <= 64.0:
        status = _feasible_at_noise(asm, model_class, noise, hi, tolerances, max_iter)
        if status is True:
            break
        hi *= 4.0
    else:
        raise SolverFailureError(f"robustness({model_class.tag}): no feasible bracket found")
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        status = _feasible_at_noise(asm, model_class, noise, mid, tolerances, max_iter)
        if status is None:
            # boundary query too degenerate to certify either way: nudge once,
            # then accept the bracket if it already meets the 1e-6 consistency
            mid2 = lo + 0.75 * (hi - lo)
            status = _feasible_at_noise(asm, model_class, noise, mid2, tolerances, max_iter)
            if status is None:
                if hi - lo <= 1e-6:
                    break
                raise SolverFailureError(f"robustness({model_class.tag}): bisection stalled")
            mid = mid2
        if status:
            hi = mid
        else:
            lo = mid
    return RobustnessReport(hi, noise, model_class.tag, hi - lo, True)


def robustness_report(asm: Assemblage, model_class: ModelClass, noise: str = "generalized",
                      tolerances: Tolerances = DEFAULT_TOL, max_iter: int = 200) -> RobustnessReport:
    """Minimal noise weight r with (sigma + r*tau)/(1+r) inside the class.

    noise="mixed": tau is the maximally mixed assemblage.
    noise="generalized": tau ranges over all valid assemblages (default).
    Falls back to certified bisection when the direct optimization stalls.
    """
    if noise not in ("mixed", "generalized"):
        raise InputError("noise mode must be 'mixed' or 'generalized'")
    rep = validate(asm, tolerances=tolerances)
    if not rep.valid:
        raise InputError("assemblage invalid; robustness needs a valid input")
    builder = _PB()
    r_block = builder.add_block(1)
    noise_terms, _ = _add_noise_blocks(builder, asm, noise, r_block)
    for strategies in _strategy_lists(model_class):
        _expansion_rows(builder, asm, strategies, noise_terms)
    builder.set_objective("min", coord_terms=[(r_block, 0, 1.0)])
    program = builder.build()
    sol = solve(program, tolerances, max_iter)
    if sol.status != "optimal":
        return _robustness_bisect(asm, model_class, noise, tolerances, max_iter)
    return RobustnessReport(
        value=max(sol.objective_value, 0.0),
        mode=noise,
        class_tag=model_class.tag,
        gap=sol.gap,
        certificate_verified=verify_certificate(program, sol, tolerances),
    )


def robustness(asm: Assemblage, model_class: ModelClass, noise: str = "generalized",
               tolerances: Tolerances = DEFAULT_TOL) -> float:
    return robustness_report(asm, model_class, noise, tolerances).value


def optimal_witness(asm: Assemblage, model_class: ModelClass,
                    tolerances: Tolerances = DEFAULT_TOL) -> WitnessCertificate:
    """Dual-derived witness; raises MemberError when the assemblage is in the class."""
    report = membership(asm, model_class, tolerances)
    if report.feasible:
        raise MemberError(f"assemblage admits a {model_class.tag} model; no witness exists")
    return report.witness


# ---------------------------------------------------------------------------
# genuine multipartite steering


@dataclass
class GmsReport:
    member: bool
    a_side: dict | None = None
    b_side: dict | None = None
    third_ab: list | None = None
    third_ba: list | None = None
    recomposition_error: float = math.nan
    gap: float = math.nan
    certificate_verified: bool = False
    farkas_blocks: dict | None = None


def gms_membership(asm: Assemblage, tolerances: Tolerances = DEFAULT_TOL, max_iter: int = 200) -> GmsReport:
    """Biseparable decomposition test with a time-ordered third term.

    sigma = sum_f [a=f(x)] tau_f(b|y) + sum_g [b=g(y)] tau'_g(a|x) + chi(a,b|x,y)
    where the tau terms are unnormalized one-box assemblages (PSD, no-signaling
    in the remaining box) and chi admits deterministic expansions in both time
    orders with a shared value.  Infeasibility certifies genuinely multipartite
    steering.
    """
    sc = asm.scenario
    if sc.n_untrusted != 2:
        raise InputError("the biseparability test is defined for two untrusted boxes")
    rep = validate(asm, tolerances=tolerances)
    if not rep.valid:
        raise InputError("assemblage invalid; validate() it first")
    d = sc.trusted_dim
    ins, outs = sc.inputs_per_party, sc.outputs_per_party
    builder = _PB()
    f_list = _det_functions(ins[0], outs[0])
    g_list = _det_functions(ins[1], outs[1])
    a_blocks = {f: {(b, y): builder.add_block(d) for b in range(outs[1]) for y in range(ins[1])} for f in f_list}
    b_blocks = {g: {(a, x): builder.add_block(d) for a in range(outs[0]) for x in range(ins[0])} for g in g_list}
    to_ab = enumerate_strategies(ModelClass("to-ab", sc))
    to_ba = enumerate_strategies(ModelClass("to-ba", sc))
    ab_blocks = [builder.add_block(d) for _ in to_ab]
    ba_blocks = [builder.add_block(d) for _ in to_ba]
    # element matching: first two terms plus the A->B expansion of the third
    for (a, x) in [(a, x) for a in sc.outcome_tuples() for x in sc.input_tuples()]:
        key = (a, x)
        target = svec(asm.elements[key])
        for k in range(d * d):
            terms = []
            for f in f_list:
                if f[x[0]] == a[0]:
                    terms.append((a_blocks[f][(a[1], x[1])], k, 1.0))
            for g in g_list:
                if g[x[1]] == a[1]:
                    terms.append((b_blocks[g][(a[0], x[0])], k, 1.0))
            for lam, strat in enumerate(to_ab):
                p = strat.prob(a, x)
                if p:
                    terms.append((ab_blocks[lam], k, p))
            builder.add_eq(coord_terms=terms, rhs=target[k])
    # the third term must admit both time orders: equate the two expansions
    for (a, x) in [(a, x) for a in sc.outcome_tuples() for x in sc.input_tuples()]:
        for k in range(d * d):
            terms = [
                (ab_blocks[lam], k, strat.prob(a, x))
                for lam, strat in enumerate(to_ab) if strat.prob(a, x)
            ]
            terms += [
                (ba_blocks[lam], k, -strat.prob(a, x))
                for lam, strat in enumerate(to_ba) if strat.prob(a, x)
            ]
            builder.add_eq(coord_terms=terms, rhs=0.0)
    # no-signaling of the one-box terms in their remaining box
    for f in f_list:
        for y in range(1, ins[1]):
            for k in range(d * d):
                terms = [(a_blocks[f][(b, 0)], k, 1.0) for b in range(outs[1])]
                terms += [(a_blocks[f][(b, y)], k, -1.0) for b in range(outs[1])]
                builder.add_eq(coord_terms=terms, rhs=0.0)
    for g in g_list:
        for x in range(1, ins[0]):
            for k in range(d * d):
                terms = [(b_blocks[g][(a, 0)], k, 1.0) for a in range(outs[0])]
                terms += [(b_blocks[g][(a, x)], k, -1.0) for a in range(outs[0])]
                builder.add_eq(coord_terms=terms, rhs=0.0)
    program = builder.build()
    sol = solve(program, tolerances, max_iter)
    if sol.status == "numerical-failure":
        raise SolverFailureError("biseparability program did not converge", sol.residuals)
    verified = verify_certificate(program, sol, tolerances)
    if sol.status == "infeasible":
        keys = list(sc.element_keys())
        blocks = {
            key: smat(np.asarray(sol.dual_eq[i * d * d : (i + 1) * d * d]), d)
            for i, key in enumerate(keys)
        }
        return GmsReport(member=False, gap=sol.gap, certificate_verified=verified, farkas_blocks=blocks)
    a_side = {f: {by: sol.primal[blk] for by, blk in a_blocks[f].items()} for f in f_list}
    b_side = {g: {ax: sol.primal[blk] for ax, blk in b_blocks[g].items()} for g in g_list}
    third_ab = [sol.primal[blk] for blk in ab_blocks]
    third_ba = [sol.primal[blk] for blk in ba_blocks]
    rec_err = 0.0
    for (a, x) in [(a, x) for a in sc.outcome_tuples() for x in sc.input_tuples()]:
        total = np.zeros((d, d), dtype=complex)
        for f in f_list:
            if f[x[0]] == a[0]:
                total += a_side[f][(a[1], x[1])]
        for g in g_list:
            if g[x[1]] == a[1]:
                total += b_side[g][(a[0], x[0])]
        for lam, strat in enumerate(to_ab):
            total += strat.prob(a, x) * third_ab[lam]
        rec_err = max(rec_err, float(np.abs(total - asm.elements[(a, x)]).max()))
    return GmsReport(
        member=True, a_side=a_side, b_side=b_side, third_ab=third_ab, third_ba=third_ba,
        recomposition_error=rec_err, gap=sol.gap, certificate_verified=verified,
    )


# ---------------------------------------------------------------------------
# fully device-independent membership across a bipartition


@dataclass
class BehaviorReport:
    class_tag: str
    feasible: bool
    weights: np.ndarray | None = None
    pair_labels: list | None = None
    functional: dict | None = None
    gap: float = math.nan
    certificate_verified: bool = False


def behavior_membership(beh: Behavior, model_class: ModelClass | str,
                        tolerances: Tolerances = DEFAULT_TOL, max_iter: int = 200) -> BehaviorReport:
    """Hidden-variable feasibility across the (first parties) | (last party) cut.

    Products of a class strategy on the leading boxes with a deterministic
    response of the last box span the model polytope; the program is a linear
    feasibility problem over their weights.
    """
    rep = validate(beh, tolerances=tolerances)
    if not rep.valid:
        raise InputError("behavior invalid; validate() it first")
    sc = beh.scenario
    if sc.n_untrusted < 2:
        raise InputError("need at least two parties to cut")
    lead_sc = Scenario(
        n_untrusted=sc.n_untrusted - 1,
        inputs_per_party=sc.inputs_per_party[:-1],
        outputs_per_party=sc.outputs_per_party[:-1],
        trusted_dim=0,
    )
    tag = model_class if isinstance(model_class, str) else model_class.tag
    lead_class = ModelClass(tag, lead_sc)
    lead_strategies = enumerate_strategies(lead_class)
    last_fns = _det_functions(sc.inputs_per_party[-1], sc.outputs_per_party[-1])
    builder = _PB()
    pairs = []
    blocks = []
    for strat in lead_strategies:
        for h in last_fns:
            pairs.append((strat, h))
            blocks.append(builder.add_block(1))
    for key in sc.element_keys():
        a, x = key
        lead_a, last_a = a[:-1], a[-1]
        lead_x, last_x = x[:-1], x[-1]
        terms = []
        for i, (strat, h) in enumerate(pairs):
            if h[last_x] != last_a:
                continue
            p = strat.prob(lead_a, lead_x)
            if p:
                terms.append((blocks[i], 0, p))
        builder.add_eq(coord_terms=terms, rhs=beh.probability(a, x))
    program = builder.build()
    sol = solve(program, tolerances, max_iter)
    if sol.status == "numerical-failure":
        raise SolverFailureError("behavior membership did not converge", sol.residuals)
    verified = verify_certificate(program, sol, tolerances)
    if sol.status == "optimal":
        weights = np.array([float(np.real(m[0, 0])) for m in sol.primal])
        labels = [f"{strat.label}*det:{h}" for strat, h in pairs]
        return BehaviorReport(
            class_tag=tag, feasible=True, weights=weights, pair_labels=labels,
            gap=sol.gap, certificate_verified=verified,
        )
    keys = list(sc.element_keys())
    functional = {key: float(sol.dual_eq[i]) for i, key in enumerate(keys)}
    return BehaviorReport(
        class_tag=tag, feasible=False, functional=functional,
        gap=sol.gap, certificate_verified=verified,
    )
