import math

import numpy as np
import pytest

from steerkit import (
    ModelClass,
    Scenario,
    Wiring,
    apply_wiring,
    apply_wiring_behavior,
    chsh_max,
    membership,
    uniform_assemblage,
    validate,
)
from steerkit.errors import InputError, StateValidationError
from steerkit.hermitian import PAULI_I, PAULI_X, PAULI_Z
from steerkit.membership import enumerate_strategies
from steerkit.protocols import (
    canonical_witnesses,
    ghz_assemblage_from_state,
    noisy_w_assemblage,
    noisy_w_assemblage_from_state,
    universal_initial_assemblage,
    universal_initial_behavior,
    verify_tabulated_to_model,
)
from steerkit.sampling import random_behavior, random_one_box_assemblage, rng_for

CANONICAL_OBS = [(2 * PAULI_Z + PAULI_X) / math.sqrt(5), PAULI_X]


def test_ghz_model_recomposes_exactly(ghz):
    asm, model = ghz
    assert model.max_recomposition_error(asm) <= 1e-12


def test_ghz_state_route_agrees(ghz):
    asm, _ = ghz
    assert asm.max_deviation(ghz_assemblage_from_state()) <= 1e-12


def test_ghz_wires_to_target(ghz, wired_target):
    asm, _ = ghz
    wired = apply_wiring(asm, Wiring.y_equals_a(asm.scenario))
    assert wired.max_deviation(wired_target) <= 1e-12


def test_universal_assemblage_random_targets():
    rng = rng_for(61)
    for _ in range(10):
        target = random_one_box_assemblage(rng)
        initial, model = universal_initial_assemblage(target)
        assert validate(initial).valid
        assert model.max_recomposition_error(initial) <= 1e-12
        back = apply_wiring(initial, Wiring.y_equals_a(initial.scenario))
        assert back.max_deviation(target) <= 1e-12


def test_universal_assemblage_uniform_target():
    target = uniform_assemblage(Scenario(1, (2,), (2,), 2))
    initial, _ = universal_initial_assemblage(target)
    for key, m in initial.elements.items():
        assert np.abs(m - np.eye(2) / 8).max() < 1e-14


def test_universal_assemblage_is_lhs():
    rng = rng_for(67)
    target = random_one_box_assemblage(rng)
    initial, _ = universal_initial_assemblage(target)
    assert membership(initial, ModelClass("lhs", initial.scenario)).feasible


def test_universal_behavior_random_targets():
    rng = rng_for(71)
    sc = Scenario(2, (2, 2), (2, 2), 0)
    for _ in range(10):
        target = random_behavior(rng, sc)
        initial, model = universal_initial_behavior(target)
        assert validate(initial).valid
        assert model.max_recomposition_error(initial) <= 1e-12
        back = apply_wiring_behavior(initial, Wiring.y_equals_a(initial.scenario))
        assert back.max_deviation(target) <= 1e-12


def test_universal_behavior_product_target_weights():
    # product target with uniform first-box marginal: all model weights are 1/4
    sc = Scenario(2, (2, 2), (2, 2), 0)
    from steerkit.correlations import Behavior

    target = Behavior(sc, {
        ((b, c), (x, z)): 0.25 for b in (0, 1) for c in (0, 1) for x in (0, 1) for z in (0, 1)
    })
    _, model = universal_initial_behavior(target)
    assert np.abs(model.lhv.weights - 0.25).max() < 1e-12


def test_universal_behavior_deterministic_target():
    sc = Scenario(2, (2, 2), (2, 2), 0)
    from steerkit.correlations import Behavior

    target = Behavior(sc, {
        ((b, c), (x, z)): 1.0 if (b, c) == (x, 0) else 0.0
        for b in (0, 1) for c in (0, 1) for x in (0, 1) for z in (0, 1)
    })
    initial, model = universal_initial_behavior(target)
    assert model.max_recomposition_error(initial) <= 1e-12
    assert len(model.lhv.weights) == 2  # zero-marginal branches are dropped


def test_noisy_w_endpoints():
    v1 = noisy_w_assemblage(1.0)
    assert validate(v1).valid
    v0 = noisy_w_assemblage(0.0)
    for key, m in v0.elements.items():
        assert np.abs(m - np.eye(2) / 8).max() < 1e-14
    with pytest.raises(InputError):
        noisy_w_assemblage(1.2)


def test_noisy_w_matches_state_route():
    for v in (0.0, 0.3, 0.64, 1.0):
        table = noisy_w_assemblage(v)
        direct = noisy_w_assemblage_from_state(v)
        assert table.max_deviation(direct) <= 1e-12


def test_noisy_w_valid_across_visibilities():
    for v in (0.1, 0.5, 0.9):
        assert validate(noisy_w_assemblage(v)).valid


def test_canonical_witness_values(wired_target, noisy_w_064):
    steering, nslhs = canonical_witnesses()
    assert abs(steering.evaluate(wired_target) - 1.0721) <= 1e-3
    assert abs(nslhs.evaluate(noisy_w_064) - 0.0301) <= 2e-3


def test_steering_witness_tight_on_deterministic_boxes(wired_target):
    steering, _ = canonical_witnesses()
    sc1 = Scenario(1, (2,), (2,), 2)
    ok, hi, lo = steering.verify_bound(
        enumerate_strategies(ModelClass("lhs", sc1)), use_solver=False
    )
    assert ok
    assert abs(hi - 1.0) < 1e-9  # the bound is saturated by every deterministic box


def test_steering_witness_on_uniform_box():
    steering, _ = canonical_witnesses()
    sc1 = Scenario(1, (2,), (2,), 2)
    assert abs(steering.evaluate(uniform_assemblage(sc1)) - 0.5) < 1e-12


def test_nslhs_witness_interval_on_local_generators(noisy_w_064):
    # the published table respects its interval on the local deterministic
    # generators (up to its four-decimal rounding); the PR-box vertices exceed
    # the upper bound, so the certified interval is tied to the local polytope
    _, nslhs = canonical_witnesses()
    local = [s for s in enumerate_strategies(ModelClass("ns-lhs", Scenario(2, (2, 2), (2, 2), 2)))
             if s.label.startswith("local")]
    hi = max(float(np.linalg.eigvalsh(g).max()) for g in nslhs.strategy_images(local))
    lo = min(float(np.linalg.eigvalsh(g).min()) for g in nslhs.strategy_images(local))
    assert hi <= 2e-3  # table printed to four decimals
    assert lo >= -1.0 - 1e-6


def test_chsh_value(wired_target):
    val = chsh_max(wired_target, CANONICAL_OBS)
    assert abs(val - (math.sqrt(5) + 1) / math.sqrt(2)) < 1e-6


def test_chsh_zero_on_uniform():
    sc1 = Scenario(1, (2,), (2,), 2)
    assert chsh_max(uniform_assemblage(sc1), CANONICAL_OBS) < 1e-12


def test_chsh_relabel_invariance(wired_target):
    base = chsh_max(wired_target, CANONICAL_OBS)
    # flip outcomes and swap inputs of the untrusted box
    flipped = {}
    for (b,), (x,) in wired_target.elements:
        flipped[((1 - b,), (1 - x,))] = wired_target.elements[((b,), (x,))]
    from steerkit.correlations import Assemblage

    relabeled = Assemblage(wired_target.scenario, flipped)
    assert abs(chsh_max(relabeled, CANONICAL_OBS) - base) < 1e-10


def test_chsh_rejects_bad_observable(wired_target):
    with pytest.raises(StateValidationError):
        chsh_max(wired_target, [PAULI_Z + 0.5 * PAULI_I, PAULI_X])


def test_chsh_bounded_for_lhs_members():
    rng = rng_for(73)
    from steerkit.sampling import random_class_member

    sc1 = Scenario(1, (2,), (2,), 2)
    for _ in range(5):
        member = random_class_member(rng, ModelClass("lhs", sc1), n_terms=4)
        assert chsh_max(member, CANONICAL_OBS) <= 2.0 + 1e-8


def test_tabulated_to_model_report():
    rep = verify_tabulated_to_model()
    assert rep.passed
    assert rep.max_deviation_ab <= 2e-3
    assert rep.max_deviation_ba <= 2e-3
    assert rep.min_state_eig >= -1e-4
    assert abs(rep.weight_sum - 1.0) <= 2e-2
