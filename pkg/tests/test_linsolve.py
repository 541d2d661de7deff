import functools
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from stokes_cgp.linsolve import SaddleSolveError, SaddleSolver, augmented_matrix

from conftest import Problem, dense_reduced_solve, stacked_rel


@functools.cache
def _problem3():
    return Problem(3)


def test_zero_rhs_gives_zero(p2):
    u, p = p2.solver.solve(1.0, 0.5, np.zeros(p2.ops.n_u))
    assert not u.any() and not p.any()


@pytest.mark.parametrize("alpha,beta", [(1.0, 0.25), (1.0, 0.0), (0.0, 1.0), (2.0, 3.0)])
def test_matches_dense_oracle(p2, alpha, beta):
    g = np.random.default_rng(1).normal(size=p2.ops.n_u)
    u, p = p2.solver.solve(alpha, beta, g)
    u_ref, p_ref = dense_reduced_solve(p2.ops, alpha, beta, g)
    assert stacked_rel(u, p, u_ref, p_ref) <= 1e-10


def test_mass_projection_fixed_point(p4):
    ops, solver = p4.ops, p4.solver
    g = np.random.default_rng(2).normal(size=ops.n_u)
    w, _ = solver.solve(1.0, 1.0, g)  # some discretely divergence-free field
    u, p = solver.solve(1.0, 0.0, ops.M_u @ w)
    assert np.abs(u - w).max() <= 1e-10 * np.abs(w).max()
    assert np.abs(p).max() <= 1e-9


def test_invalid_blend_rejected(p2):
    g = np.ones(p2.ops.n_u)
    for alpha, beta in [(0.0, 0.0), (-1.0, 1.0), (1.0, -0.5)]:
        with pytest.raises(ValueError):
            p2.solver.solve(alpha, beta, g)


def test_singular_operators_reported(p2):
    broken = replace(p2.ops, B=sp.csr_matrix(p2.ops.B.shape))
    with pytest.raises(SaddleSolveError):
        SaddleSolver(broken).solve(1.0, 1.0, np.ones(p2.ops.n_u))


def test_unreachable_tolerance_reported(p4):
    solver = SaddleSolver(p4.ops, tol=1e-30)
    with pytest.raises(SaddleSolveError):
        solver.solve(1.0, 0.1, np.random.default_rng(0).normal(size=p4.ops.n_u))


def test_bitwise_reproducible(p4):
    g = np.random.default_rng(5).normal(size=p4.ops.n_u)
    a = SaddleSolver(p4.ops).solve(1.0, 0.125, g)
    b = SaddleSolver(p4.ops).solve(1.0, 0.125, g)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_factorization_cached(p4):
    solver = SaddleSolver(p4.ops)
    g = np.ones(p4.ops.n_u)
    solver.solve(1.0, 0.5, g)
    solver.solve(1.0, 0.5, 2 * g)
    solver.solve(1.0, 0.0, g)
    assert len(solver._cache) == 2


def test_augmented_matrix_shape(p2):
    mat = augmented_matrix(p2.ops, 1.0, 0.5)
    n = p2.ops.n_u + p2.ops.n_p + 1
    assert mat.shape == (n, n)
    assert abs(mat - mat.T).max() <= 1e-14


@given(st.integers(0, 2 ** 31), st.floats(0.0, 4.0), st.floats(0.01, 4.0))
@settings(max_examples=25, deadline=None)
def test_solution_contract(seed, alpha, beta):
    prob = _problem3()
    ops, solver = prob.ops, prob.solver
    g = np.random.default_rng(seed).normal(size=ops.n_u)
    u, p, lam = solver.solve_full(alpha, beta, g)
    assert np.abs(ops.B @ u).max() <= 1e-9 * max(np.abs(u).max(), 1e-300)
    assert abs(ops.mean_vec @ p) <= 1e-10 * max(np.linalg.norm(p), 1.0)
    assert abs(lam) <= 1e-10 * np.linalg.norm(g)
    assert not u[ops.space.boundary_mask].any()

