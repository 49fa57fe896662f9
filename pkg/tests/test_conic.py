import numpy as np
import pytest

from steerkit.conic import (
    ProgramBuilder,
    add_norm_bound_block,
    dump_program,
    smat,
    solve,
    svec,
    verify_certificate,
)
from steerkit.errors import InputError
from steerkit.sampling import rng_for


def _trivial_program():
    b = ProgramBuilder()
    blk = b.add_block(2)
    b.set_objective("min", mat_terms=[(blk, np.diag([1.0, 2.0]))])
    b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=1.0)
    return b.build()


def test_svec_inner_product_random():
    rng = rng_for(1)
    for d in (1, 2, 3, 5):
        g1 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        g2 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h1, h2 = 0.5 * (g1 + g1.conj().T), 0.5 * (g2 + g2.conj().T)
        assert abs(svec(h1) @ svec(h2) - np.real(np.trace(h1 @ h2))) < 1e-12
        assert np.abs(smat(svec(h1), d) - h1).max() < 1e-14


def test_trivial_sdp():
    p = _trivial_program()
    sol = solve(p)
    assert sol.status == "optimal"
    assert abs(sol.objective_value - 1.0) < 1e-8
    assert np.abs(sol.primal[0] - np.diag([1.0, 0.0])).max() < 1e-6
    assert verify_certificate(p, sol)


def test_determinism():
    p = _trivial_program()
    s1, s2 = solve(p), solve(p)
    assert s1.status == s2.status
    assert abs(s1.objective_value - s2.objective_value) < 1e-10
    assert s1.iterations == s2.iterations


def test_verify_rejects_perturbed_solution():
    p = _trivial_program()
    sol = solve(p)
    sol.primal[0] = sol.primal[0] + 1e-3 * np.eye(2)
    assert not verify_certificate(p, sol)


def test_weak_duality_on_reported_solutions():
    rng = rng_for(4)
    for _ in range(10):
        b = ProgramBuilder()
        blk = b.add_block(3)
        g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        c = 0.5 * (g + g.conj().T)
        b.set_objective("min", mat_terms=[(blk, c)])
        b.add_eq(mat_terms=[(blk, np.eye(3))], rhs=1.0)
        p = b.build()
        sol = solve(p)
        assert sol.status == "optimal"
        # objective equals the smallest eigenvalue; gap within contract
        assert abs(sol.objective_value - np.linalg.eigvalsh(c).min()) < 1e-6
        assert sol.gap <= 1e-7 * (1 + 2 * abs(sol.objective_value))


def test_infeasible_program_certificate():
    b = ProgramBuilder()
    blk = b.add_block(2)
    b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=-1.0)  # trace of a PSD block cannot be -1
    p = b.build()
    sol = solve(p)
    assert sol.status == "infeasible"
    assert verify_certificate(p, sol)


def test_inconsistent_dependent_rows_detected():
    b = ProgramBuilder()
    blk = b.add_block(2)
    b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=1.0)
    b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=2.0)  # same row, different rhs
    p = b.build()
    sol = solve(p)
    assert sol.status == "infeasible"
    assert verify_certificate(p, sol)


def test_redundant_consistent_rows_are_dropped():
    b = ProgramBuilder()
    blk = b.add_block(2)
    b.set_objective("min", mat_terms=[(blk, np.diag([1.0, 2.0]))])
    for _ in range(5):
        b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=1.0)
    sol = solve(b.build())
    assert sol.status == "optimal"
    assert abs(sol.objective_value - 1.0) < 1e-8


def test_norm_bound_encoding_matches_grid_search():
    # least-squares reformulation on 3-dimensional instances
    rng = rng_for(8)
    for trial in range(4):
        a_mat = rng.normal(size=(4, 3))
        y = rng.normal(size=4)
        b = ProgramBuilder()
        zp = [b.add_block(1) for _ in range(3)]
        zm = [b.add_block(1) for _ in range(3)]
        rows = []
        for i in range(4):
            terms = []
            for j in range(3):
                terms.append((zp[j], 0, a_mat[i, j]))
                terms.append((zm[j], 0, -a_mat[i, j]))
            rows.append(terms)
        blk = add_norm_bound_block(b, rows, [-y[i] for i in range(4)])
        b.set_objective("min", coord_terms=[(blk, 0, 1.0)])
        sol = solve(b.build())
        assert sol.status == "optimal"
        z_star, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
        ref = np.linalg.norm(a_mat @ z_star - y)
        # dense grid search around the least-squares solution as the oracle
        grid_best = ref
        for dz in rng.normal(scale=0.05, size=(200, 3)):
            grid_best = min(grid_best, np.linalg.norm(a_mat @ (z_star + dz) - y))
        assert abs(sol.objective_value - grid_best) < 1e-4


def test_maximize_sense():
    b = ProgramBuilder()
    blk = b.add_block(2)
    b.set_objective("max", mat_terms=[(blk, np.diag([1.0, 2.0]))])
    b.add_eq(mat_terms=[(blk, np.eye(2))], rhs=1.0)
    sol = solve(b.build())
    assert sol.status == "optimal"
    assert abs(sol.objective_value - 2.0) < 1e-8


def test_program_shape_validation():
    b = ProgramBuilder()
    b.add_block(2)
    p = b.build()
    with pytest.raises(InputError):
        from steerkit.conic import ConicProgram

        ConicProgram(blocks=(2,), objective=np.zeros(3), eq_lhs=np.zeros((0, 4)),
                     eq_rhs=np.zeros(0), sense="min")


def test_dump_program_roundtrips_triplets():
    p = _trivial_program()
    text = dump_program(p)
    assert "blocks: 2" in text
    assert "sense: min" in text
    assert text.count("rhs 0 ") == 1
