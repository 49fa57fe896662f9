"""Simulated tomography pipeline: Poisson counts, NS projection, histograms.

Counts for each assemblage element and tomographic projector are drawn from
independent Poisson laws; reconstruction minimizes a count-weighted
least-squares surrogate of the negative log-likelihood over the physical
(PSD + no-signaling) assemblage set, as a conic program.  The pipeline
repeats this per seed and histograms hidden-state-model robustness and
witness values of the reconstructions.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .conic import ProgramBuilder, solve, svec
from .correlations import Assemblage, Scenario, Wiring, apply_wiring, assemblage_fidelity, validate
from .errors import InputError, SolverFailureError
from .hermitian import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from .membership import ModelClass, enumerate_strategies, robustness
from .protocols import wired_steering_witness

GENERATOR_NAME = "numpy.random.Generator(PCG64)"


def pauli_projectors() -> tuple[list[np.ndarray], list[str]]:
    """Eigenprojectors of X, Y, Z: the default qubit tomography set."""
    mats, labels = [], []
    for name, op in (("x", PAULI_X), ("y", PAULI_Y), ("z", PAULI_Z)):
        for sign, tag in ((1, "+"), (-1, "-")):
            mats.append((PAULI_I + sign * op) / 2)
            labels.append(name + tag)
    return mats, labels


def _check_complete(projectors: list[np.ndarray], dim: int):
    stack = np.array([svec(p) for p in projectors])
    if np.linalg.matrix_rank(stack, tol=1e-10) < dim * dim:
        raise InputError("projector set is tomographically incomplete")


@dataclass
class CountRecord:
    """Expected intensities and sampled counts per (element, projector) cell."""

    scenario: Scenario
    projectors: list[np.ndarray]
    projector_labels: list[str]
    flux: float
    seed: int | None
    means: dict
    counts: dict
    generator: str = GENERATOR_NAME


def sample_counts(asm: Assemblage, projectors: list[np.ndarray] | None = None,
                  flux: float = 1000.0, seed: int = 0,
                  projector_labels: list[str] | None = None) -> CountRecord:
    """Independent Poisson draws with means flux * Tr[sigma_element projector].

    flux=math.inf returns the means themselves (the infinite-statistics limit).
    """
    if projectors is None:
        projectors, projector_labels = pauli_projectors()
    if projector_labels is None:
        projector_labels = [f"p{i}" for i in range(len(projectors))]
    _check_complete(projectors, asm.scenario.trusted_dim)
    means, counts = {}, {}
    exact = math.isinf(flux)
    rng = None if exact else np.random.Generator(np.random.PCG64(seed))
    for key in asm.scenario.element_keys():
        m = asm.elements[key]
        for k, proj in enumerate(projectors):
            mean = float(np.real(np.trace(m @ proj)))
            if not exact:
                mean *= flux
            mean = max(mean, 0.0)
            cell = (key[0], key[1], k)
            means[cell] = mean
            counts[cell] = mean if exact else int(rng.poisson(mean))
    return CountRecord(
        scenario=asm.scenario, projectors=projectors, projector_labels=projector_labels,
        flux=flux, seed=None if exact else seed, means=means, counts=counts,
    )


def _add_composite_validity(builder, scenario, element_terms):
    """Normalization and no-signaling constraints on an affinely parametrized assemblage.

    element_terms[key][k] is the coordinate-term list representing element
    coordinate k; works both for free element blocks and model expansions.
    """
    from .correlations import _index_tuples, _other_input_tuples

    d = scenario.trusted_dim
    inputs = list(scenario.input_tuples())
    for x in inputs:
        terms = []
        for a in scenario.outcome_tuples():
            for i in range(d):
                terms.extend(element_terms[(a, x)][i])
        builder.add_eq(coord_terms=terms, rhs=1.0)
    for x in inputs[1:]:
        for k in range(d * d):
            terms = []
            for a in scenario.outcome_tuples():
                terms.extend(element_terms[(a, inputs[0])][k])
                terms.extend([(b, c, -w) for (b, c, w) in element_terms[(a, x)][k]])
            builder.add_eq(coord_terms=terms, rhs=0.0)
    for party in range(scenario.n_untrusted):
        for group in _other_input_tuples(scenario, party):
            rest_cards = tuple(c for i, c in enumerate(scenario.outputs_per_party) if i != party)
            for rest in _index_tuples(rest_cards):
                for x in group[1:]:
                    for k in range(d * d):
                        terms = []
                        for ai in range(scenario.outputs_per_party[party]):
                            full = list(rest)
                            full.insert(party, ai)
                            key0 = (tuple(full), group[0])
                            key1 = (tuple(full), x)
                            terms.extend(element_terms[key0][k])
                            terms.extend([(b, c, -w) for (b, c, w) in element_terms[key1][k]])
                        builder.add_eq(coord_terms=terms, rhs=0.0)


def _ns_twirl(scenario: Scenario, elements: dict) -> dict:
    """Exactly re-symmetrize an almost-no-signaling element map.

    Party by party, each one-party marginal is replaced by its input average,
    spread uniformly over that party's outcomes; a final rescaling pins the
    normalization.  Each step is exact and preserves the previous ones, so the
    solver-level residuals (~1e-9) are removed without moving any element by
    more than their own magnitude.
    """
    from .correlations import _index_tuples, _other_input_tuples

    d = scenario.trusted_dim
    out = {k: np.array(v) for k, v in elements.items()}
    for party in range(scenario.n_untrusted):
        n_out = scenario.outputs_per_party[party]
        rest_cards = tuple(c for i, c in enumerate(scenario.outputs_per_party) if i != party)
        for group in _other_input_tuples(scenario, party):
            for rest in _index_tuples(rest_cards):
                def full_key(ai, x):
                    spread = list(rest)
                    spread.insert(party, ai)
                    return (tuple(spread), x)

                margs = {
                    x: sum(out[full_key(ai, x)] for ai in range(n_out)) for x in group
                }
                mean = sum(margs.values()) / len(group)
                for x in group:
                    corr = (mean - margs[x]) / n_out
                    for ai in range(n_out):
                        out[full_key(ai, x)] = out[full_key(ai, x)] + corr
    x0 = next(scenario.input_tuples())
    total = sum(
        float(np.real(np.trace(out[(a, x0)]))) for a in scenario.outcome_tuples()
    )
    if total > 0:
        for k in out:
            out[k] = out[k] / total
    return out


def _fit(record: CountRecord, model: str, tolerances: Tolerances = DEFAULT_TOL,
         max_iter: int = 200):
    """Count-weighted least-squares fit over the NS set or a hidden-state model set.

    Returns (assemblage or None, fit error).  Each cell contributes a rotated
    2x2 arrowhead block bounding the square of its weighted residual; the
    objective is the sum of those bounds.
    """
    sc = record.scenario
    d = sc.trusted_dim
    builder = ProgramBuilder()
    if model == "ns":
        blocks = {key: builder.add_block(d) for key in sc.element_keys()}
        element_terms = {
            key: {k: [(blocks[key], k, 1.0)] for k in range(d * d)} for key in blocks
        }
    elif model == "lhs":
        strategies = enumerate_strategies(ModelClass("lhs", sc))
        omega = [builder.add_block(d) for _ in strategies]
        element_terms = {}
        for key in sc.element_keys():
            a, x = key
            element_terms[key] = {
                k: [
                    (omega[lam], k, strat.prob(a, x))
                    for lam, strat in enumerate(strategies)
                    if strat.prob(a, x) != 0.0
                ]
                for k in range(d * d)
            }
    else:
        raise InputError(f"unknown fit model {model!r}")
    _add_composite_validity(builder, sc, element_terms)
    # the infinite-statistics limit behaves like a very bright run; the steep
    # quadratic pins the recovery well below the validation tolerance
    exact = math.isinf(record.flux)
    flux = 1e6 if exact else record.flux
    cost_coords = []
    for key in sc.element_keys():
        vec_cells = [(k, svec(record.projectors[k])) for k in range(len(record.projectors))]
        for k, proj_vec in vec_cells:
            cell = (key[0], key[1], k)
            n_obs = flux * record.counts[cell] if exact else record.counts[cell]
            weight = 1.0 / math.sqrt(max(n_obs, 1.0))
            # rotated-cone cell block [[u, r], [r*, 1]]: u bounds the squared
            # weighted residual; the free imaginary part vanishes at optimum
            cell_blk = builder.add_block(2)
            builder.add_eq(coord_terms=[(cell_blk, 1, 1.0)], rhs=1.0)
            terms = [(cell_blk, 2, 1.0 / math.sqrt(2.0))]
            for j in range(d * d):
                if proj_vec[j] == 0.0:
                    continue
                for (b, c, w) in element_terms[key][j]:
                    terms.append((b, c, -w * weight * flux * proj_vec[j]))
            builder.add_eq(coord_terms=terms, rhs=-weight * n_obs)
            cost_coords.append((cell_blk, 0, 1.0))
    builder.set_objective("min", coord_terms=cost_coords)
    program = builder.build()
    sol = solve(program, tolerances, max_iter)
    if sol.status != "optimal":
        raise SolverFailureError(f"{model} tomography fit did not converge", sol.residuals)
    fit_error = max(sol.objective_value, 0.0)
    if model != "ns":
        return None, fit_error
    elements = {}
    offsets = {key: i for i, key in enumerate(sc.element_keys())}
    for key, idx in offsets.items():
        elements[key] = sol.primal[idx]
    return Assemblage(sc, _ns_twirl(sc, elements)), fit_error


def reconstruct_ns(record: CountRecord, tolerances: Tolerances = DEFAULT_TOL) -> Assemblage:
    """Best physical (PSD + no-signaling) assemblage for the observed counts."""
    asm, _ = _fit(record, "ns", tolerances)
    rep = validate(asm, tol=tolerances.experiment)
    if not rep.valid:
        raise SolverFailureError(f"reconstruction violates validity at {rep.worst():.3g}")
    return asm


def ns_fit_error(record: CountRecord, tolerances: Tolerances = DEFAULT_TOL) -> float:
    return _fit(record, "ns", tolerances)[1]


def lhs_fit_error(record: CountRecord, tolerances: Tolerances = DEFAULT_TOL) -> float:
    return _fit(record, "lhs", tolerances)[1]


# ---------------------------------------------------------------------------
# Monte-Carlo pipeline


def histogram_table(values, bins: int = 25) -> list[tuple[float, float, int]]:
    vals = np.asarray(values, dtype=float)
    if len(vals) == 0:
        return []
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        return [(lo, lo, len(vals))]
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))]


@dataclass
class PipelineResult:
    flux: float
    seeds: list[int]
    records: list[dict]
    robustness_hist: list = field(default_factory=list)
    witness_hist: list = field(default_factory=list)
    generator: str = GENERATOR_NAME

    @property
    def robustness_values(self):
        return [r["robustness"] for r in self.records]

    @property
    def witness_values(self):
        return [r["witness_value"] for r in self.records]

    def write_csv(self, path, which: str = "witness"):
        rows = self.witness_hist if which == "witness" else self.robustness_hist
        with open(path, "w") as fh:
            fh.write("bin_low,bin_high,count\n")
            for lo, hi, count in rows:
                fh.write(f"{lo!r},{hi!r},{count}\n")

    def write_jsonl(self, path):
        import json

        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")


def _pipeline_one(args):
    (asm, flux, seed, witness, witness_target, robustness_mode, with_lhs_fit, tolerances) = args
    record = sample_counts(asm, flux=flux, seed=seed)
    fit_asm, ns_err = _fit(record, "ns", tolerances)
    rep = validate(fit_asm, tol=tolerances.experiment)
    if not rep.valid:
        raise SolverFailureError(f"reconstruction violates validity at {rep.worst():.3g}")
    out = {"seed": seed, "ns_fit_error": ns_err}
    loose = tolerances.with_validation(tolerances.experiment)
    if with_lhs_fit:
        out["lhs_fit_error"] = _fit(record, "lhs", tolerances)[1]
    out["robustness"] = robustness(fit_asm, ModelClass("lhs", asm.scenario), noise=robustness_mode,
                                   tolerances=loose)
    if witness_target == "wired" and asm.scenario.n_untrusted >= 2:
        wired = apply_wiring(fit_asm, Wiring.y_equals_a(asm.scenario))
        out["witness_value"] = witness.evaluate(wired)
    else:
        # one-box inputs are already in wired form: evaluate directly
        out["witness_value"] = witness.evaluate(fit_asm)
    out["fidelity_to_input"] = assemblage_fidelity(fit_asm, asm, tolerances=loose)
    return out


def pipeline_histograms(asm: Assemblage, flux: float, seeds: int, base_seed: int = 0,
                        witness=None, witness_target: str = "wired",
                        robustness_mode: str = "generalized", with_lhs_fit: bool = True,
                        bins: int = 25, workers: int | None = None,
                        tolerances: Tolerances = DEFAULT_TOL) -> PipelineResult:
    """Per seed: sample counts, reconstruct, robustness, witness value.

    Emits histogram tables plus the NS-versus-model fit-error comparison.
    The worker pool is sized by `workers`, capped by STEERKIT_THREADS.
    """
    if witness is None:
        witness = wired_steering_witness()
    seed_list = [base_seed + i for i in range(seeds)]
    cap = os.environ.get("STEERKIT_THREADS")
    if workers is None:
        workers = 1
    if cap is not None:
        workers = max(1, min(workers, int(cap)))
    args = [
        (asm, flux, s, witness, witness_target, robustness_mode, with_lhs_fit, tolerances)
        for s in seed_list
    ]
    if workers > 1:
        with Pool(processes=workers) as pool:
            records = pool.map(_pipeline_one, args)
    else:
        records = [_pipeline_one(a) for a in args]
    result = PipelineResult(flux=flux, seeds=seed_list, records=records)
    result.robustness_hist = histogram_table(result.robustness_values, bins)
    result.witness_hist = histogram_table(result.witness_values, bins)
    return result
