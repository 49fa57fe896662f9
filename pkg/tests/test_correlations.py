import math

import numpy as np
import pytest

from steerkit import (
    Assemblage,
    Behavior,
    Scenario,
    Wiring,
    apply_wiring,
    apply_wiring_behavior,
    assemblage_fidelity,
    behavior_from_assemblage,
    validate,
)
from steerkit.errors import InputError, ScenarioMismatchError, StateValidationError, StructureError
from steerkit.hermitian import PAULI_I, PAULI_X, PAULI_Z
from steerkit.sampling import (
    random_behavior,
    random_one_box_assemblage,
    random_quantum_assemblage,
    rng_for,
)

SC2 = Scenario(2, (2, 2), (2, 2), 2)
SC1 = Scenario(1, (2,), (2,), 2)


def test_scenario_invariants():
    with pytest.raises(InputError):
        Scenario(2, (2,), (2, 2), 2)
    with pytest.raises(InputError):
        Scenario(1, (0,), (2,), 2)


def test_assemblage_missing_element_is_structural():
    elements = {(((0,), (0,))): np.eye(2) / 2}
    with pytest.raises(StructureError):
        Assemblage(SC1, {((0,), (0,)): np.eye(2) / 2})


def test_ghz_assemblage_is_valid(ghz):
    asm, _ = ghz
    assert validate(asm).valid


def test_normalization_violation_magnitude(ghz, wired_target):
    # scaling one element by 1.1 shifts that input's total trace by 0.1 * trace
    asm, _ = ghz
    key = (((0, 0), (0, 0)))
    scaled = Assemblage(asm.scenario, {
        k: (1.1 * m if k == ((0, 0), (0, 0)) else m) for k, m in asm.elements.items()
    })
    rep = validate(scaled)
    assert not rep.valid
    assert abs(rep.worst("normalization") - 0.025) < 1e-12

    scaled1 = Assemblage(wired_target.scenario, {
        k: (1.1 * m if k == ((0,), (0,)) else m) for k, m in wired_target.elements.items()
    })
    rep1 = validate(scaled1)
    assert abs(rep1.worst("normalization") - 0.05) < 1e-12


def test_signaling_behavior_flagged():
    sc = Scenario(2, (2, 2), (2, 2), 0)
    elements = {}
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                for b in (0, 1):
                    p_a = 1.0 if a == y else 0.0  # Alice's marginal depends on y
                    elements[((a, b), (x, y))] = p_a * 0.5
    beh = Behavior(sc, elements)
    rep = validate(beh)
    assert not rep.valid
    assert rep.worst("ns-party") > 0.4


def test_wiring_maps_ghz_to_target(ghz, wired_target):
    asm, _ = ghz
    wired = apply_wiring(asm, Wiring.y_equals_a(asm.scenario))
    assert wired.max_deviation(wired_target) <= 1e-12
    assert validate(wired).valid


def test_identity_wiring_is_identity(ghz):
    asm, _ = ghz
    assert apply_wiring(asm, Wiring.identity(asm.scenario)).max_deviation(asm) == 0.0


def test_wiring_closure_and_linearity_randomized():
    rng = rng_for(17)
    w = Wiring.y_equals_a(SC2)
    for _ in range(15):
        a1 = random_quantum_assemblage(rng)
        a2 = random_quantum_assemblage(rng)
        out1 = apply_wiring(a1, w)
        assert validate(out1).valid
        lam = rng.uniform(0.2, 0.8)
        mix = Assemblage(SC2, {
            k: lam * a1.elements[k] + (1 - lam) * a2.elements[k] for k in a1.elements
        })
        lhs = apply_wiring(mix, w)
        rhs_el = {
            k: lam * out1.elements[k] + (1 - lam) * apply_wiring(a2, w).elements[k]
            for k in out1.elements
        }
        dev = max(float(np.abs(lhs.elements[k] - rhs_el[k]).max()) for k in lhs.elements)
        assert dev < 1e-12


def test_four_box_wiring_brute_force():
    # x2 = a3, x3 = x4, final outputs (a1 xor a2, a4); product input behavior
    rng = rng_for(23)
    sc4 = Scenario(4, (2, 2, 2, 2), (2, 2, 2, 2), 0)
    singles = {p: rng.dirichlet(np.ones(2), size=2) for p in range(4)}  # P_p(a|x)
    elements = {}
    for x in sc4.input_tuples():
        for a in sc4.outcome_tuples():
            p = 1.0
            for party in range(4):
                p *= singles[party][x[party]][a[party]]
            elements[(a, x)] = p
    beh = Behavior(sc4, elements)

    # firing order: 3 fires before 2 so that x2 = a3 is available
    from steerkit.correlations import _index_tuples

    ordering = (0, 2, 3, 1)
    maps = [dict() for _ in range(4)]
    fired = []
    for party in ordering:
        cards = tuple(2 for _ in fired)
        table = {}
        for xf in _index_tuples((2, 2)):
            for eo in _index_tuples(cards):
                if party == 0:
                    table[(xf, eo)] = xf[0]
                elif party == 3:
                    table[(xf, eo)] = xf[1]
                elif party == 2:
                    table[(xf, eo)] = xf[1]  # x3 = x4 (the second final input)
                else:  # party 1, input = party 2's output; parties 0,2 fired earlier
                    table[(xf, eo)] = eo[1]
        maps[party] = table
        fired.append(party)
    output_map = {a: (a[0] ^ a[1], a[3]) for a in _index_tuples((2, 2, 2, 2))}
    w = Wiring(4, ordering, maps, output_map, (2, 2), (2, 2), (2, 2, 2, 2), (2, 2, 2, 2))
    wired = apply_wiring_behavior(beh, w)

    # brute-force oracle: direct summation over all outcomes
    for xf in wired.scenario.input_tuples():
        total_prob = 0.0
        for bf in wired.scenario.outcome_tuples():
            total = 0.0
            for a in sc4.outcome_tuples():
                x = (xf[0], a[2], xf[1], xf[1])
                if (a[0] ^ a[1], a[3]) == bf:
                    total += beh.probability(a, x)
            assert abs(wired.probability(bf, xf) - total) < 1e-12
            total_prob += total
        assert abs(total_prob - 1.0) < 1e-12

    # the two final boxes stay statistically independent: the joint is the
    # product of the merged box's table with the untouched fourth box
    for xf in wired.scenario.input_tuples():
        for bf in wired.scenario.outcome_tuples():
            q_b = sum(wired.probability((bf[0], a4), xf) for a4 in (0, 1))
            p_a4 = singles[3][xf[1]][bf[1]]
            assert abs(wired.probability(bf, xf) - q_b * p_a4) < 1e-12


def test_behavior_from_assemblage_correlators(wired_target):
    obs = [(2 * PAULI_Z + PAULI_X) / math.sqrt(5), PAULI_X]
    povms = [[(PAULI_I + o) / 2, (PAULI_I - o) / 2] for o in obs]
    beh = behavior_from_assemblage(wired_target, povms)
    assert validate(beh).valid

    def corr(x, z):
        return sum(
            (-1) ** (b + c) * beh.probability((b, c), (x, z)) for b in (0, 1) for c in (0, 1)
        )

    assert abs(corr(0, 0) - 2 / math.sqrt(10)) < 1e-12
    assert abs(corr(1, 0) - 3 / math.sqrt(10)) < 1e-12
    assert abs(corr(0, 1)) < 1e-12
    assert abs(corr(1, 1) - 1 / math.sqrt(2)) < 1e-12


def test_behavior_from_assemblage_trivial_povm(ghz):
    asm, _ = ghz
    beh = behavior_from_assemblage(asm, [[np.eye(2) / 2, np.eye(2) / 2]])
    assert validate(beh).valid
    for x in beh.scenario.input_tuples():
        for a in beh.scenario.outcome_tuples():
            expected = 0.5 * asm.probability(a[:2], x[:2])
            assert abs(beh.probability(a, x) - expected) < 1e-12


def test_behavior_from_assemblage_rejects_non_povm(wired_target):
    with pytest.raises(StateValidationError):
        behavior_from_assemblage(wired_target, [[np.eye(2), np.eye(2)]])


def test_assemblage_fidelity_self_and_orthogonal(wired_target):
    assert abs(assemblage_fidelity(wired_target, wired_target) - 1.0) < 1e-12
    ket0 = np.diag([1.0, 0.0])
    ket1 = np.diag([0.0, 1.0])
    a1 = Assemblage(SC1, {((a,), (x,)): 0.5 * ket0 for a in (0, 1) for x in (0, 1)})
    a2 = Assemblage(SC1, {((a,), (x,)): 0.5 * ket1 for a in (0, 1) for x in (0, 1)})
    assert assemblage_fidelity(a1, a2) == 0.0


def test_assemblage_fidelity_against_mixed_state_oracle(wired_target):
    # closed-form value for the wired target against its depolarized version
    mixed = Assemblage(SC1, {
        k: np.real(np.trace(m)) * np.eye(2) / 2 for k, m in wired_target.elements.items()
    })
    expected = 0.5 * ((0.5 + math.sqrt(0.125)) + 0.5)
    # rank-1 elements carry ~1e-17 determinant noise that the fidelity square
    # root amplifies to ~1e-9
    assert abs(assemblage_fidelity(wired_target, mixed) - expected) < 1e-7


def test_assemblage_fidelity_scenario_mismatch(ghz, wired_target):
    asm, _ = ghz
    with pytest.raises(ScenarioMismatchError):
        assemblage_fidelity(asm, wired_target)


def test_fidelity_symmetry_random():
    rng = rng_for(31)
    for _ in range(5):
        a1 = random_one_box_assemblage(rng)
        a2 = random_one_box_assemblage(rng)
        assert abs(assemblage_fidelity(a1, a2) - assemblage_fidelity(a2, a1)) < 1e-10


def test_random_behavior_passes_validation():
    rng = rng_for(41)
    sc = Scenario(3, (2, 2, 2), (2, 2, 2), 0)
    for _ in range(5):
        assert validate(random_behavior(rng, sc)).valid


def test_ghz_with_z_basis_gives_valid_tripartite_behavior(ghz):
    asm, _ = ghz
    z_basis = [[np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]]
    beh = behavior_from_assemblage(asm, z_basis)
    assert beh.scenario.n_untrusted == 3
    assert validate(beh).valid
    # direct evaluation oracle on one entry
    expected = float(np.real(asm.element((0, 0), (0, 0))[0, 0]))
    assert abs(beh.probability((0, 0, 0), (0, 0, 0)) - expected) < 1e-12


def test_behavior_from_assemblage_valid_for_random_povms():
    rng = rng_for(59)
    from steerkit.sampling import random_projective_measurement

    for _ in range(5):
        asm = random_quantum_assemblage(rng)
        povms = [random_projective_measurement(rng) for _ in range(2)]
        assert validate(behavior_from_assemblage(asm, povms)).valid
