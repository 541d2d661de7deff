import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from stokes_cgp.analysis import ManufacturedSolution
from stokes_cgp.assembly import assemble_load, assemble_operators, check_csr
from stokes_cgp.fem import Q1, TaylorHoodSpace, eval_shape, gauss_rule_2d
from stokes_cgp.mesh import build_unit_square


@pytest.fixture(scope="module")
def ops3():
    return assemble_operators(TaylorHoodSpace(build_unit_square(3)))


def test_q1_mass_on_unit_cell():
    M = assemble_operators(TaylorHoodSpace(build_unit_square(1))).M_p.toarray()
    assert M[0, 0] == pytest.approx(1 / 9, abs=1e-15)
    assert M[0, 1] == pytest.approx(1 / 18, abs=1e-15)
    # global numbering is lexicographic, so vertex 3 is the opposite corner
    assert M[0, 2] == pytest.approx(1 / 18, abs=1e-15)
    assert M[0, 3] == pytest.approx(1 / 36, abs=1e-15)


def test_q1_stiffness_on_unit_cell():
    rule = gauss_rule_2d(3)
    _, g = Q1.tabulate(rule.points)
    K = np.einsum("q,qid,qjd->ij", rule.weights, g, g)
    assert K[0, 0] == pytest.approx(2 / 3, abs=1e-15)
    assert K[0, 2] == pytest.approx(-1 / 3, abs=1e-15)


def test_structure_and_symmetry(ops3):
    for mat in (ops3.M_u, ops3.A, ops3.B, ops3.M_p):
        check_csr(mat)
    for mat in (ops3.M_u, ops3.A, ops3.M_p):
        d = mat.toarray()
        assert np.abs(d - d.T).max() <= 1e-13 * np.abs(d).max()


def test_check_csr_rejects_unsorted():
    bad = sp.csr_matrix((np.array([1.0, 2.0]), np.array([1, 0]), np.array([0, 2])), shape=(1, 2))
    with pytest.raises(ValueError):
        check_csr(bad)


def test_global_sums(ops3):
    assert ops3.M_u.sum() == pytest.approx(2.0, abs=1e-13)
    assert ops3.mean_vec.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.abs(np.ones(ops3.n_p) @ ops3.B).max() <= 1e-12


def test_stiffness_positive_definite_on_interior(ops3):
    keep = ops3.space.interior_mask
    A = ops3.A.toarray()[np.ix_(keep, keep)]
    assert np.linalg.eigvalsh(A).min() > 0


def test_load_examples():
    s = TaylorHoodSpace(build_unit_square(3))
    assert not assemble_load(s, None, lambda x: np.zeros((len(x), 2))).any()
    raw = assemble_load(s, None, lambda x: np.tile([1.0, 0.0], (len(x), 1)), zero_boundary=False)
    assert raw[:s.n_q2].sum() == pytest.approx(1.0, abs=1e-14)
    assert not raw[s.n_q2:].any()
    zeroed = assemble_load(s, None, lambda x: np.tile([1.0, 0.0], (len(x), 1)))
    assert not zeroed[s.boundary_velocity_dofs].any()


def test_forcing_load_against_dense_quadrature():
    """Cell loops with a 12-point Gauss rule per axis as the reference."""
    s = TaylorHoodSpace(build_unit_square(8))
    f0 = lambda x: ManufacturedSolution().forcing(x, 0.0)
    vec = assemble_load(s, gauss_rule_2d(6), f0)
    x, w = np.polynomial.legendre.leggauss(12)
    x, w = 0.5 * (x + 1), 0.5 * w
    ref = np.zeros(s.n_u)
    hcell = s.mesh.cell_width
    for c, origin in enumerate(s.mesh.cell_origins()):
        for xi, wi in zip(x, w):
            for eta, wj in zip(x, w):
                phi, _ = eval_shape("Q2", (xi, eta))
                val = f0(np.array([origin + hcell * np.array([xi, eta])]))[0]
                dofs = s.cell_q2[c]
                ref[dofs] += wi * wj * hcell ** 2 * val[0] * phi
                ref[dofs + s.n_q2] += wi * wj * hcell ** 2 * val[1] * phi
    ref[s.boundary_velocity_dofs] = 0.0
    assert np.abs(vec - ref).max() <= 1e-12


def test_rejects_coarse_assembly_quadrature():
    with pytest.raises(ValueError):
        assemble_operators(TaylorHoodSpace(build_unit_square(2)), gauss_rule_2d(2))


def _cell_integral(space, v, w, kind):
    """Independent evaluation of bilinear forms with eval_shape and 4x4 Gauss."""
    rule = gauss_rule_2d(4)
    n = space.mesh.n
    total = 0.0
    for c in range(space.mesh.n_cells):
        vd = space.cell_q2[c]
        pd = space.cell_pressure_dofs[c]
        for pt, wt in zip(rule.points, rule.weights):
            phi, dphi = eval_shape("Q2", pt)
            dphi = dphi * n
            if kind == "a":
                gv = np.array([v[vd] @ dphi, v[vd + space.n_q2] @ dphi])
                gw = np.array([w[vd] @ dphi, w[vd + space.n_q2] @ dphi])
                total += wt * np.sum(gv * gw) / n ** 2
            else:
                psi, _ = eval_shape("Q1", pt)
                div = v[vd] @ dphi[:, 0] + v[vd + space.n_q2] @ dphi[:, 1]
                total += -wt * div * (w[pd] @ psi) / n ** 2
    return total


@given(st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_assembly_matches_cellwise_evaluation(seed):
    rng = np.random.default_rng(seed)
    space = TaylorHoodSpace(build_unit_square(2))
    ops = assemble_operators(space)
    v, w = rng.normal(size=(2, space.n_u))
    a_ref = _cell_integral(space, v, w, "a")
    assert v @ ops.A @ w == pytest.approx(a_ref, rel=1e-12, abs=1e-12)
    v[space.boundary_velocity_dofs] = 0.0
    q = rng.normal(size=space.n_p)
    assert q @ ops.B @ v == pytest.approx(_cell_integral(space, v, q, "b"), rel=1e-12, abs=1e-12)
