import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from stokes_cgp.analysis import (
    COLLOCATION,
    INTERPOLATION,
    ConvergenceReport,
    ErrorEvaluator,
    LevelRecord,
    ManufacturedSolution,
    eoc,
    forcing,
    get_setup,
    l2plus_norm,
    lbar2_norm,
    level_errors,
    run_convergence_study,
    solve_level,
    space_error_h1semi,
    space_error_l2,
    time_l2_norm,
)
from stokes_cgp.fem import PRESSURE, VELOCITY, TaylorHoodSpace, interpolate_nodal
from stokes_cgp.mesh import build_unit_square
from stokes_cgp.timestepping import TimeMesh

MS = ManufacturedSolution()
points = st.tuples(st.floats(0, 1), st.floats(0, 1))


def test_initial_values_vanish():
    x = np.random.default_rng(0).uniform(size=(50, 2))
    assert not MS.u(x, 0.0).any() and not MS.p(x, 0.0).any()


def test_zero_trace():
    s = np.linspace(0, 1, 17)
    edges = np.concatenate([np.column_stack([s, 0 * s]), np.column_stack([s, 0 * s + 1]),
                            np.column_stack([0 * s, s]), np.column_stack([0 * s + 1, s])])
    for t in (0.3, 1.1, 2.0):
        assert np.abs(MS.u(edges, t)).max() <= 1e-15


def test_divergence_free():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, t = rng.uniform(size=(1, 2)), rng.uniform(0, 2)
        assert abs(MS.div_u(x, t)[0]) <= 1e-12


def test_pressure_mean_zero():
    val, _ = integrate.dblquad(lambda y, x: MS.p(np.array([[x, y]]), 1.3)[0], 0, 1, 0, 1)
    assert abs(val) <= 1e-12


def test_forcing_examples():
    x = np.random.default_rng(2).uniform(size=(30, 2))
    assert np.allclose(forcing(x, 0.0), MS.dt_u(x, 0.0), atol=1e-15)
    assert np.allclose(forcing(np.array([[0.5, 0.5]]), 0.0), 0.0, atol=1e-15)


def _fd_forcing(x, t, h=1e-4):
    x = np.asarray(x, float).reshape(1, 2)
    e = np.eye(2) * h
    dt = (MS.u(x, t + h) - MS.u(x, t - h)) / (2 * h)
    lap = sum(MS.u(x + e[i], t) - 2 * MS.u(x, t) + MS.u(x - e[i], t) for i in range(2)) / h ** 2
    grad = np.array([(MS.p(x + e[i], t) - MS.p(x - e[i], t))[0] for i in range(2)]) / (2 * h)
    return dt[0] - lap[0] + grad


def test_forcing_against_finite_differences_seeded():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, t = rng.uniform(size=2), rng.uniform(0, 2)
        assert np.abs(forcing(x[None], t)[0] - _fd_forcing(x, t)).max() <= 1e-6


@given(points, st.floats(0, 2))
@settings(max_examples=200, deadline=None)
def test_forcing_against_finite_differences_truncation_bound(x, t):
    """With h = 1e-4 the five-point Laplacian has truncation error up to
    h^2/12 * (8 pi^4 / 2 + 8 pi^4) ~ 9.7e-7 per component, plus about 1e-7
    from the pressure gradient and round-off; 1.3e-6 bounds the sum."""
    assert np.abs(forcing(np.array([x]), t)[0] - _fd_forcing(x, t)).max() <= 1.3e-6


@given(points, st.floats(0, 2))
@settings(max_examples=50, deadline=None)
def test_closed_form_derivatives(x, t):
    x = np.array([x])
    h = 1e-6
    e = np.eye(2) * h
    fd_grad = np.stack([(MS.u(x + e[d], t) - MS.u(x - e[d], t))[0] / (2 * h) for d in range(2)], axis=-1)
    assert np.allclose(MS.grad_u(x, t)[0], fd_grad, atol=1e-7)
    fd_gp = np.array([(MS.p(x + e[d], t) - MS.p(x - e[d], t))[0] / (2 * h) for d in range(2)])
    assert np.allclose(MS.grad_p(x, t)[0], fd_gp, atol=1e-7)
    assert np.allclose(MS.grad_dt_u(x, 0.0)[0], MS.grad_u(x, math.pi / 2)[0], atol=1e-15)


def test_space_errors_of_polynomial_field():
    s = TaylorHoodSpace(build_unit_square(3))
    bubble = lambda x: np.column_stack([x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1]), 0 * x[:, 0]])
    v = interpolate_nodal(s, VELOCITY, bubble)
    assert space_error_l2(s, VELOCITY, v, None) == pytest.approx(1 / 30, abs=1e-12)
    assert space_error_h1semi(s, VELOCITY, v, None) == pytest.approx(math.sqrt(1 / 45), abs=1e-12)
    assert space_error_l2(s, VELOCITY, np.zeros(s.n_u), lambda x: np.zeros((len(x), 2))) == 0.0
    assert space_error_l2(s, VELOCITY, v, bubble) <= 1e-15
    with pytest.raises(ValueError):
        ErrorEvaluator(s, 4)


def test_time_norm_examples():
    tm = TimeMesh.uniform(2.0, 3)
    assert time_l2_norm(lambda t, n: 0.0, tm) == 0.0
    assert time_l2_norm(lambda t, n: 1.0, tm) == pytest.approx(math.sqrt(2), abs=1e-14)
    assert time_l2_norm(lambda t, n: t, TimeMesh.uniform(1.0, 1)) == pytest.approx(math.sqrt(1 / 3), abs=1e-13)
    with pytest.raises(ValueError):
        time_l2_norm(lambda t, n: t, tm, 4)


def test_discrete_norms():
    tm = TimeMesh.uniform(2.0, 4)
    assert lbar2_norm(np.zeros(4), tm) == 0.0
    assert lbar2_norm(np.ones(4), tm) == pytest.approx(math.sqrt(2))
    w = np.array([0.3, 1.0, 2.0, 0.1])
    assert l2plus_norm(-3 * w, tm) == pytest.approx(3 * l2plus_norm(w, tm))
    with pytest.raises(ValueError):
        lbar2_norm(np.ones(3), tm)


def test_eoc_examples():
    assert eoc(4e-2, 1e-2) == 2.0
    assert round(eoc(1.5106628370e00, 2.3275917549e-01), 2) == 2.70
    assert eoc(0.3, 0.3) == 0.0
    with pytest.raises(ValueError):
        eoc(0.0, 1.0)


def test_report_eocs():
    rep = ConvergenceReport("interpolation", [
        LevelRecord(0, 1.0, 0.3, {("L2", "p_L2"): 4e-2}),
        LevelRecord(1, 0.5, 0.15, {("L2", "p_L2"): 1e-2}),
    ])
    rep.fill_eocs()
    assert rep.eoc("L2", "p_L2", 0) is None
    assert rep.eoc("L2", "p_L2") == 2.0
    assert rep.column("L2", "p_L2") == [4e-2, 1e-2]


def test_setup_lookup():
    assert get_setup("formulated").load_rule == "trapezoidal"
    assert get_setup("tables").collocation == "local"
    with pytest.raises(ValueError):
        get_setup("fastest")


def _exact_norms():
    """Analytic time factors times spatial norms from adaptive quadrature."""
    grad2 = integrate.dblquad(lambda y, x: np.sum(MS.grad_u(np.array([[x, y]]), math.pi / 2) ** 2), 0, 1, 0, 1)[0]
    u2 = integrate.dblquad(lambda y, x: np.sum(MS.u(np.array([[x, y]]), math.pi / 2) ** 2), 0, 1, 0, 1)[0]
    p2 = integrate.dblquad(lambda y, x: MS.p(np.array([[x, y]]), math.pi / 2)[0] ** 2, 0, 1, 0, 1)[0]
    sin2 = 1 - math.sin(4) / 4  # int_0^2 sin^2
    cos2 = 1 + math.sin(4) / 4
    return {
        ("L2", "u_H1"): math.sqrt(sin2 * grad2),
        ("L2", "dtu_L2"): math.sqrt(cos2 * u2),
        ("L2", "p_L2"): math.sqrt(sin2 * p2),
        ("lbar2", "u_H1"): math.sqrt(math.sin(0.5) ** 2 * grad2 + math.sin(1.5) ** 2 * grad2),
        ("l2plus", "dtu_L2"): math.sqrt(u2 * (1 + math.cos(1.0) ** 2)),
    }


@pytest.mark.parametrize("variant", [COLLOCATION, INTERPOLATION])
def test_zero_forcing_gives_exact_solution_norms(variant):
    zero = lambda x, t: np.zeros((len(x), 2))
    rep = run_convergence_study([0], variant=variant, f=zero)
    for key, value in _exact_norms().items():
        assert rep.error(*key) == pytest.approx(value, rel=1e-8), key


@pytest.fixture(scope="module")
def level2():
    return solve_level(2, setup="formulated")


def test_shared_midpoint_pressure_norm(level2):
    a = level_errors(level2, COLLOCATION)[("lbar2", "p_L2")]
    b = level_errors(level2, INTERPOLATION)[("lbar2", "p_L2")]
    ev = ErrorEvaluator(level2.space)
    tm = level2.traj.time_mesh
    raw = lbar2_norm([ev.l2(PRESSURE, level2.traj.p_mid[m], lambda x: MS.p(x, tm.midpoints[m])) for m in range(tm.N)], tm)
    assert abs(a - raw) <= 1e-12 * raw and abs(b - raw) <= 1e-12 * raw


def test_time_quadrature_saturated(level2):
    base = level_errors(level2, COLLOCATION, time_points=5)
    fine = level_errors(level2, COLLOCATION, time_points=10)
    for key in base:
        assert abs(base[key] - fine[key]) <= 1e-10 * base[key], key


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        run_convergence_study([0], variant="extrapolation")
    with pytest.raises(ValueError):
        run_convergence_study([], variant=COLLOCATION)
