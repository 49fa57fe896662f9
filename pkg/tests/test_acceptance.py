"""Acceptance suite: every criterion at its stated tolerance, one line each.

Run with -s to see the per-criterion PASS/FAIL lines as they complete; the
Monte-Carlo criterion dominates the runtime.
"""
import math
import os

import numpy as np
import pytest

from steerkit import (
    Assemblage,
    ModelClass,
    Scenario,
    Wiring,
    apply_wiring,
    apply_wiring_behavior,
    chsh_max,
    gms_membership,
    membership,
    robustness,
    validate,
)
from steerkit.hermitian import PAULI_X, PAULI_Z
from steerkit.membership import enumerate_strategies
from steerkit.experiment import pipeline_histograms
from steerkit.protocols import (
    canonical_witnesses,
    ghz_assemblage,
    ghz_wired_assemblage,
    noisy_w_assemblage,
    universal_initial_assemblage,
    universal_initial_behavior,
    verify_tabulated_to_model,
)
from steerkit.sampling import (
    random_behavior,
    random_class_member,
    random_one_box_assemblage,
    random_quantum_assemblage,
    random_state,
    rng_for,
)

SC2 = Scenario(2, (2, 2), (2, 2), 2)
SC1 = Scenario(1, (2,), (2,), 2)
CANONICAL_OBS = [(2 * PAULI_Z + PAULI_X) / math.sqrt(5), PAULI_X]
WORKERS = max(1, min(4, os.cpu_count() or 1))


def _report(num: int, desc: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {num:2d} {tag}: {desc}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def ghz_pair():
    return ghz_assemblage()


@pytest.fixture(scope="module")
def wired():
    return ghz_wired_assemblage()


@pytest.fixture(scope="module")
def noisy_w():
    return noisy_w_assemblage(0.64)


def test_acceptance_01_canonical_recomposition(ghz_pair):
    asm, model = ghz_pair
    worst = model.max_recomposition_error(asm)
    rng = rng_for(101)
    for _ in range(100):
        target = random_one_box_assemblage(rng)
        initial, m = universal_initial_assemblage(target)
        worst = max(worst, m.max_recomposition_error(initial))
    rng_b = rng_for(102)
    sc_b = Scenario(2, (2, 2), (2, 2), 0)
    for _ in range(100):
        target = random_behavior(rng_b, sc_b)
        initial, m = universal_initial_behavior(target)
        worst = max(worst, m.max_recomposition_error(initial))
    _report(1, "canonical models recompose their constructions (<= 1e-12)",
            worst <= 1e-12, f"max deviation {worst:.2e}")


def test_acceptance_02_exposure_identity(ghz_pair, wired):
    asm, _ = ghz_pair
    worst = apply_wiring(asm, Wiring.y_equals_a(SC2)).max_deviation(wired)
    rng = rng_for(201)
    for _ in range(100):
        target = random_one_box_assemblage(rng)
        initial, _ = universal_initial_assemblage(target)
        back = apply_wiring(initial, Wiring.y_equals_a(SC2))
        worst = max(worst, back.max_deviation(target))
    rng_b = rng_for(202)
    sc_b = Scenario(2, (2, 2), (2, 2), 0)
    for _ in range(100):
        target = random_behavior(rng_b, sc_b)
        initial, _ = universal_initial_behavior(target)
        back = apply_wiring_behavior(initial, Wiring.y_equals_a(initial.scenario))
        worst = max(worst, back.max_deviation(target))
    _report(2, "y=a wiring reaches every target exactly (<= 1e-12)",
            worst <= 1e-12, f"max deviation {worst:.2e}")


def test_acceptance_03_witness_value(wired):
    steering, _ = canonical_witnesses()
    value = steering.evaluate(wired)
    _report(3, "canonical steering witness on the wired target = 1.0721 +- 1e-3",
            abs(value - 1.0721) <= 1e-3, f"value {value:.6f}")


def test_acceptance_04_chsh(wired):
    value = chsh_max(wired, CANONICAL_OBS)
    target = (math.sqrt(5) + 1) / math.sqrt(2)
    _report(4, "CHSH with canonical observables = 2.28825 +- 1e-4",
            abs(value - 2.28825) <= 1e-4, f"value {value:.6f} (exact {target:.6f})")


def test_acceptance_05_hierarchy_separations(ghz_pair, noisy_w):
    asm, _ = ghz_pair
    checks = []
    rep = membership(asm, ModelClass("lhs", SC2))
    checks.append(("ghz in lhs", rep.feasible and rep.certificate_verified and rep.gap <= 1e-7))
    rep_to = membership(asm, ModelClass("to-lhs", SC2))
    checks.append(("ghz not in to-lhs", (not rep_to.feasible) and rep_to.certificate_verified))
    rep_w_to = membership(noisy_w, ModelClass("to-lhs", SC2))
    checks.append((
        "noisy-w in to-lhs",
        rep_w_to.feasible and rep_w_to.certificate_verified and rep_w_to.gap <= 1e-7,
    ))
    rep_w_ns = membership(noisy_w, ModelClass("ns-lhs", SC2))
    checks.append(("noisy-w not in ns-lhs", (not rep_w_ns.feasible) and rep_w_ns.certificate_verified))
    ok = all(flag for _, flag in checks)
    _report(5, "hierarchy separations certified (gap <= 1e-7)", ok,
            "; ".join(f"{name}={flag}" for name, flag in checks))


def test_acceptance_06_nslhs_witness(noisy_w):
    _, witness = canonical_witnesses()
    value = witness.evaluate(noisy_w)
    v_lo, v_hi = 0.2, 0.9
    w_lo = witness.evaluate(noisy_w_assemblage(v_lo))
    w_hi = witness.evaluate(noisy_w_assemblage(v_hi))
    slope = (w_hi - w_lo) / (v_hi - v_lo)
    root = v_lo - w_lo / slope
    ok = abs(value - 0.0301) <= 2e-3 and abs(root - 0.58) <= 0.01
    _report(6, "canonical ns-lhs witness: value 0.0301 +- 2e-3, root at v = 0.58 +- 0.01",
            ok, f"value {value:.5f}, root {root:.4f}")


def test_acceptance_07_tabulated_decomposition():
    rep = verify_tabulated_to_model()
    worst = max(rep.max_deviation_ab, rep.max_deviation_ba)
    _report(7, "tabulated time-ordered model recomposes noisy-W(0.64) (<= 2e-3)",
            rep.passed and worst <= 2e-3,
            f"deviations ab {rep.max_deviation_ab:.2e}, ba {rep.max_deviation_ba:.2e}")


def test_acceptance_08_witness_soundness():
    steering, nslhs = canonical_witnesses()
    rng = rng_for(808)
    strategies_ns = enumerate_strategies(ModelClass("ns-lhs", SC2))
    ns_vals = []
    for _ in range(1000):
        picks = rng.choice(24, size=12, replace=False)
        w = rng.dirichlet(np.ones(12))
        elements = {key: np.zeros((2, 2), dtype=complex) for key in SC2.element_keys()}
        for wi, idx in zip(w, picks):
            rho = random_state(rng)
            for (a, x), p in strategies_ns[idx].table.items():
                elements[(a, x)] = elements[(a, x)] + wi * p * rho
        ns_vals.append(nslhs.evaluate(Assemblage(SC2, elements)))
    strategies_1 = enumerate_strategies(ModelClass("lhs", SC1))
    st_vals = []
    for _ in range(1000):
        w = rng.dirichlet(np.ones(4))
        elements = {key: np.zeros((2, 2), dtype=complex) for key in SC1.element_keys()}
        for wi, strat in zip(w, strategies_1):
            rho = random_state(rng)
            for (a, x), p in strat.table.items():
                elements[(a, x)] = elements[(a, x)] + wi * p * rho
        st_vals.append(steering.evaluate(Assemblage(SC1, elements)))
    ok = (
        max(st_vals) <= 1.0 + 1e-8
        and max(ns_vals) <= 2e-3
        and min(ns_vals) >= -1.0 - 1e-6
    )
    _report(8, "witness soundness on 1000 sampled members each", ok,
            f"steering max {max(st_vals):.6f}; ns-lhs range [{min(ns_vals):.4f}, {max(ns_vals):.4f}]")


def test_acceptance_09_wiring_consistency():
    rng = rng_for(909)
    w = Wiring.y_equals_a(SC2)
    all_ok = True
    for i in range(200):
        member = random_class_member(rng, ModelClass("to-ab", SC2))
        if i % 20 == 0:
            assert membership(member, ModelClass("to-ab", SC2)).feasible
        wired_member = apply_wiring(member, w)
        if not membership(wired_member, ModelClass("lhs", SC1)).feasible:
            all_ok = False
            break
    _report(9, "wired output of 200 TO(A->B)-feasible assemblages stays single-box LHS",
            all_ok)


def test_acceptance_10_robustness_consistency(wired, noisy_w, ghz_pair):
    rng = rng_for(1010)
    ghz_asm, _ = ghz_pair
    uniform1 = Assemblage(SC1, {k: 0.25 * np.eye(2) for k in SC1.element_keys()})
    cases = []
    for _ in range(60):
        cases.append((random_class_member(rng, ModelClass("lhs", SC1)), ModelClass("lhs", SC1)))
    for v in np.linspace(0.0, 1.0, 40):
        mix = Assemblage(SC1, {
            k: v * wired.elements[k] + (1 - v) * uniform1.elements[k] for k in wired.elements
        })
        cases.append((mix, ModelClass("lhs", SC1)))
    for tag in ("lhs", "to-ab", "to-ba", "ns-lhs", "to-lhs"):
        for _ in range(10):
            cases.append((random_class_member(rng, ModelClass(tag, SC2)), ModelClass(tag, SC2)))
    for _ in range(30):
        cases.append((random_quantum_assemblage(rng), ModelClass("lhs", SC2)))
    cases.append((noisy_w, ModelClass("ns-lhs", SC2)))
    cases.append((noisy_w, ModelClass("to-lhs", SC2)))
    cases.append((ghz_asm, ModelClass("lhs", SC2)))
    cases.append((ghz_asm, ModelClass("to-lhs", SC2)))
    for v in (0.2, 0.5, 0.8):
        cases.append((noisy_w_assemblage(v), ModelClass("ns-lhs", SC2)))
    for _ in range(13):
        cases.append((random_quantum_assemblage(rng), ModelClass("ns-lhs", SC2)))
    assert len(cases) == 200
    mismatches = 0
    for asm, cls in cases:
        r = robustness(asm, cls)
        feasible = membership(asm, cls).feasible
        if (r <= 1e-6) != feasible:
            mismatches += 1
    _report(10, "robustness = 0 iff membership feasible on 200 randomized cases",
            mismatches == 0, f"mismatches {mismatches}")


def test_acceptance_11_monte_carlo_pipeline(ghz_pair):
    asm, _ = ghz_pair
    res = pipeline_histograms(asm, flux=1e3, seeds=500, base_seed=0, workers=WORKERS,
                              with_lhs_fit=False)
    med_rob = float(np.median(res.robustness_values))
    mean_wit = float(np.mean(res.witness_values))
    res_hi = pipeline_histograms(asm, flux=1e5, seeds=60, base_seed=7000, workers=WORKERS,
                                 with_lhs_fit=False)
    mean_hi = float(np.mean(res_hi.witness_values))
    converges = abs(mean_hi - 1.0721) < abs(mean_wit - 1.0721) and abs(mean_hi - 1.0721) <= 2e-3
    ok = med_rob <= 1e-3 and 1.05 <= mean_wit <= 1.09 and converges
    _report(11, "Monte-Carlo: robustness median <= 1e-3, witness mean in [1.05, 1.09], converging",
            ok,
            f"median robustness {med_rob:.2e}; witness mean {mean_wit:.4f} -> {mean_hi:.4f} at flux 1e5")


def test_acceptance_12_gms(noisy_w):
    rep = gms_membership(noisy_w)
    third_only = membership(noisy_w, ModelClass("to-lhs", SC2)).feasible
    ok = rep.member and rep.certificate_verified and third_only
    rng = rng_for(1212)
    for i in range(100):
        kind = i % 3
        elements = {key: np.zeros((2, 2), dtype=complex) for key in SC2.element_keys()}
        if kind == 0:
            # A|BC-form plus B|AC-form mixture with no-signaling one-box parts
            f = tuple(rng.integers(2, size=2))
            g = tuple(rng.integers(2, size=2))
            states = [random_state(rng) for _ in range(4)]
            for x in SC2.input_tuples():
                for a in SC2.outcome_tuples():
                    val = np.zeros((2, 2), dtype=complex)
                    if f[x[0]] == a[0]:
                        val = val + 0.5 * 0.5 * states[a[1]]
                    if g[x[1]] == a[1]:
                        val = val + 0.5 * 0.5 * states[2 + a[0]]
                    elements[(a, x)] = val
            asm = Assemblage(SC2, elements)
        elif kind == 1:
            # convex mix of a biseparable-form term with a time-ordered member
            member = random_class_member(rng, ModelClass("ns-lhs", SC2))
            f = tuple(rng.integers(2, size=2))
            states = [random_state(rng) for _ in range(2)]
            for x in SC2.input_tuples():
                for a in SC2.outcome_tuples():
                    val = 0.6 * member.elements[(a, x)]
                    if f[x[0]] == a[0]:
                        val = val + 0.4 * 0.5 * states[a[1]]
                    elements[(a, x)] = val
            asm = Assemblage(SC2, elements)
        else:
            # third-term-only instances: time-ordered members incl. noisy-W mixes
            v = rng.uniform(0.0, 0.64)
            base = noisy_w_assemblage(v)
            member = random_class_member(rng, ModelClass("ns-lhs", SC2))
            lam = rng.uniform(0.0, 1.0)
            asm = Assemblage(SC2, {
                k: lam * base.elements[k] + (1 - lam) * member.elements[k] for k in base.elements
            })
        assert validate(asm).valid
        if not gms_membership(asm).member:
            ok = False
            break
    _report(12, "biseparability test accepts noisy-W(0.64) and 100 randomized constructions",
            ok)
