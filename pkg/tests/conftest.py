import numpy as np
import pytest

from stokes_cgp.assembly import assemble_operators
from stokes_cgp.fem import TaylorHoodSpace
from stokes_cgp.linsolve import SaddleSolver
from stokes_cgp.mesh import build_unit_square


class Problem:
    """Space, operators and solver bundled for one mesh size."""

    def __init__(self, n):
        self.space = TaylorHoodSpace(build_unit_square(n))
        self.ops = assemble_operators(self.space)
        self.solver = SaddleSolver(self.ops)


@pytest.fixture(scope="session")
def p2():
    return Problem(2)


@pytest.fixture(scope="session")
def p4():
    return Problem(4)


def dense_reduced_solve(ops, alpha, beta, g):
    """Reference solution: boundary DOFs deleted, pressure mean pinned by a
    Lagrange multiplier, everything dense and solved with numpy."""
    keep = np.flatnonzero(ops.space.interior_mask)
    K = (alpha * ops.M_u.toarray() + beta * ops.A.toarray())[np.ix_(keep, keep)]
    B = ops.B.toarray()[:, keep]
    m = ops.M_p.toarray().sum(axis=0)
    nk, npr = keep.size, B.shape[0]
    mat = np.block([
        [K, B.T, np.zeros((nk, 1))],
        [B, np.zeros((npr, npr)), m[:, None]],
        [np.zeros((1, nk)), m[None, :], np.zeros((1, 1))],
    ])
    rhs = np.concatenate([np.asarray(g)[keep], np.zeros(npr + 1)])
    x = np.linalg.solve(mat, rhs)
    u = np.zeros(ops.n_u)
    u[keep] = x[:nk]
    return u, x[nk:nk + npr]


def stacked_rel(u, p, u_ref, p_ref):
    ref = np.concatenate([u_ref, p_ref])
    return np.linalg.norm(np.concatenate([u, p]) - ref) / np.linalg.norm(ref)
