"""Manufactured solution, error norms and the convergence study."""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_operators
from .fem import PRESSURE, VELOCITY, TaylorHoodSpace, gauss_rule_2d
from .linsolve import SaddleSolveError, SaddleSolver
from .mesh import build_unit_square
from .postprocess import (
    InterpolationTrajectory,
    collocation_extend,
    collocation_local,
    eval_dt_u_tilde,
    eval_p_tilde,
    eval_u_tilde,
)
from .timestepping import TimeMesh, eval_velocity, march

PI = math.pi

COLLOCATION = "collocation"
INTERPOLATION = "interpolation"
VARIANTS = (COLLOCATION, INTERPOLATION)

NORM_FAMILIES = ("L2", "lbar2", "l2plus")
QUANTITIES = ("u_H1", "dtu_L2", "p_L2")


@dataclass(frozen=True)
class SchemeSetup:
    """How the load is integrated in time and how collocation data are built.

    ``formulated`` is the scheme exactly as derived: trapezoidal load and the
    one-solve collocation recurrence.  ``tables`` integrates the load with a
    Gauss rule in time and re-solves the collocation problem at every node;
    this is the configuration that reproduces the reference error tables
    (the two agree for forcing that is affine in time).
    """

    name: str
    load_rule: str
    collocation: str
    load_points: int = 5

    def __post_init__(self):
        if self.collocation not in ("recurrence", "local"):
            raise ValueError(f"unknown collocation mode {self.collocation!r}")


FORMULATED_SETUP = SchemeSetup("formulated", "trapezoidal", "recurrence")
TABLE_SETUP = SchemeSetup("tables", "gauss", "local")
SETUPS = {s.name: s for s in (TABLE_SETUP, FORMULATED_SETUP)}


def get_setup(setup) -> SchemeSetup:
    if isinstance(setup, SchemeSetup):
        return setup
    try:
        return SETUPS[setup]
    except KeyError:
        raise ValueError(f"unknown setup {setup!r}; choose from {sorted(SETUPS)}") from None


class ManufacturedSolution:
    """Smooth divergence-free test flow on the unit square, ``T = 2``.

    Both fields separate as ``profile(x) * sin(t)``.  All methods are
    vectorised over points ``x`` of shape ``(m, 2)``.
    """

    T = 2.0

    @staticmethod
    def _velocity_profile(x):
        sx, cx = np.sin(PI * x[:, 0]), np.cos(PI * x[:, 0])
        sy, cy = np.sin(PI * x[:, 1]), np.cos(PI * x[:, 1])
        return np.column_stack([cy * sx ** 2 * sy, -cx * sy ** 2 * sx])

    @staticmethod
    def _velocity_profile_grad(x):
        s2x, c2x = np.sin(2 * PI * x[:, 0]), np.cos(2 * PI * x[:, 0])
        s2y, c2y = np.sin(2 * PI * x[:, 1]), np.cos(2 * PI * x[:, 1])
        sx2 = np.sin(PI * x[:, 0]) ** 2
        sy2 = np.sin(PI * x[:, 1]) ** 2
        g = np.empty((x.shape[0], 2, 2))
        g[:, 0, 0] = 0.5 * PI * s2x * s2y
        g[:, 0, 1] = PI * sx2 * c2y
        g[:, 1, 0] = -PI * c2x * sy2
        g[:, 1, 1] = -0.5 * PI * s2x * s2y
        return g

    @staticmethod
    def _velocity_profile_laplacian(x):
        s2x, s2y = np.sin(2 * PI * x[:, 0]), np.sin(2 * PI * x[:, 1])
        sx2 = np.sin(PI * x[:, 0]) ** 2
        sy2 = np.sin(PI * x[:, 1]) ** 2
        return PI ** 2 * np.column_stack([s2y * (1 - 4 * sx2), -s2x * (1 - 4 * sy2)])

    @staticmethod
    def _pressure_profile(x):
        return 0.25 * np.sin(2 * PI * x[:, 0]) * np.sin(2 * PI * x[:, 1])

    @staticmethod
    def _pressure_profile_grad(x):
        s2x, c2x = np.sin(2 * PI * x[:, 0]), np.cos(2 * PI * x[:, 0])
        s2y, c2y = np.sin(2 * PI * x[:, 1]), np.cos(2 * PI * x[:, 1])
        return 0.5 * PI * np.column_stack([c2x * s2y, s2x * c2y])

    def u(self, x, t):
        return self._velocity_profile(np.atleast_2d(x)) * math.sin(t)

    def dt_u(self, x, t):
        return self._velocity_profile(np.atleast_2d(x)) * math.cos(t)

    def grad_u(self, x, t):
        """``[..., c, d] = d u_c / d x_d``."""
        return self._velocity_profile_grad(np.atleast_2d(x)) * math.sin(t)

    def grad_dt_u(self, x, t):
        return self._velocity_profile_grad(np.atleast_2d(x)) * math.cos(t)

    def laplace_u(self, x, t):
        return self._velocity_profile_laplacian(np.atleast_2d(x)) * math.sin(t)

    def p(self, x, t):
        return self._pressure_profile(np.atleast_2d(x)) * math.sin(t)

    def grad_p(self, x, t):
        return self._pressure_profile_grad(np.atleast_2d(x)) * math.sin(t)

    def div_u(self, x, t):
        g = self.grad_u(x, t)
        return g[:, 0, 0] + g[:, 1, 1]

    def forcing(self, x, t):
        x = np.atleast_2d(x)
        return self.dt_u(x, t) - self.laplace_u(x, t) + self.grad_p(x, t)

    def u0(self, x):
        return self.u(x, 0.0)

    def initial_data(self, x):
        """``f(0) + Laplace u(0)``, which equals ``dt u(0) + grad p(0)``."""
        return self.forcing(x, 0.0) + self.laplace_u(x, 0.0)

    def initial_data_grad(self, x):
        # grad p(0) and Laplace u(0) vanish, leaving grad dt u(0)
        return self.grad_dt_u(x, 0.0)


def forcing(x, t):
    return ManufacturedSolution().forcing(x, t)


class ErrorEvaluator:
    """Spatial L2 and H1-seminorm errors of FE functions on one space."""

    def __init__(self, space: TaylorHoodSpace, points_per_axis: int = 5):
        if points_per_axis < 5:
            raise ValueError("error quadrature needs at least 5 points per axis")
        self.space = space
        self.quad = gauss_rule_2d(points_per_axis)
        self.points = space.physical_points(self.quad.points).reshape(-1, 2)
        self._w = np.tile(self.quad.weights, space.mesh.n_cells) * space.mesh.cell_width ** 2

    def _integrate(self, sq):
        return float(np.sqrt(max(np.dot(self._w, sq), 0.0)))

    def l2(self, component, coeffs, exact=None):
        vals = self.space.cell_values(component, coeffs, self.quad.points).reshape(
            self._w.size, *((2,) if component == VELOCITY else ())
        )
        if exact is not None:
            vals = vals - np.asarray(exact(self.points)).reshape(vals.shape)
        sq = vals ** 2 if vals.ndim == 1 else np.sum(vals ** 2, axis=1)
        return self._integrate(sq)

    def h1semi(self, component, coeffs, exact_grad=None):
        grads = self.space.cell_values(component, coeffs, self.quad.points, derivative=True)
        grads = grads.reshape(self._w.size, -1)
        if exact_grad is not None:
            grads = grads - np.asarray(exact_grad(self.points)).reshape(grads.shape)
        return self._integrate(np.sum(grads ** 2, axis=1))


def space_error_l2(space, component, coeffs, exact, quad_points_per_axis=5):
    return ErrorEvaluator(space, quad_points_per_axis).l2(component, coeffs, exact)


def space_error_h1semi(space, component, coeffs, exact_grad, quad_points_per_axis=5):
    return ErrorEvaluator(space, quad_points_per_axis).h1semi(component, coeffs, exact_grad)


def time_l2_norm(error_at_t, time_mesh: TimeMesh, points_per_interval: int = 5) -> float:
    """``(int_0^T error(t)^2 dt)^{1/2}`` with Gauss quadrature on each interval.

    ``error_at_t(t, n)`` receives the time and the 1-based interval index, so
    piecewise quantities can be evaluated inside the right interval.
    """
    if points_per_interval < 5:
        raise ValueError("time quadrature needs at least 5 points per interval")
    x, w = np.polynomial.legendre.leggauss(points_per_interval)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    total = 0.0
    for n in range(1, time_mesh.N + 1):
        t0, tau = time_mesh.nodes[n - 1], time_mesh.tau[n - 1]
        for xq, wq in zip(x, w):
            total += wq * tau * error_at_t(t0 + xq * tau, n) ** 2
    return math.sqrt(total)


def _weighted_rss(samples, time_mesh):
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (time_mesh.N,):
        raise ValueError(f"expected {time_mesh.N} samples, got shape {samples.shape}")
    return float(np.sqrt(np.sum(time_mesh.tau * samples ** 2)))


def lbar2_norm(w_at_midpoints, time_mesh: TimeMesh) -> float:
    """Midpoint-sampled discrete norm from per-interval spatial norms."""
    return _weighted_rss(w_at_midpoints, time_mesh)


def l2plus_norm(w_right_limits, time_mesh: TimeMesh) -> float:
    """Discrete norm sampling the right limits at the left interval ends."""
    return _weighted_rss(w_right_limits, time_mesh)


def eoc(e_coarse: float, e_fine: float) -> float:
    if e_coarse <= 0 or e_fine <= 0:
        raise ValueError("errors must be positive")
    return math.log2(e_coarse / e_fine)


@dataclass
class LevelRecord:
    level: int
    tau: float
    h: float
    errors: dict = field(default_factory=dict)
    eocs: dict = field(default_factory=dict)


@dataclass
class ConvergenceReport:
    variant: str
    records: list = field(default_factory=list)
    setup: str = "tables"

    def error(self, family, quantity, level=-1):
        return self.records[level].errors[(family, quantity)]

    def eoc(self, family, quantity, level=-1):
        return self.records[level].eocs.get((family, quantity))

    def column(self, family, quantity):
        return [r.errors[(family, quantity)] for r in self.records]

    def fill_eocs(self):
        for prev, rec in zip(self.records, self.records[1:]):
            for key, val in rec.errors.items():
                e0 = prev.errors[key]
                rec.eocs[key] = eoc(e0, val) if e0 > 0 and val > 0 else float("nan")


@dataclass
class LevelSolution:
    """Everything produced on one refinement level."""

    level: int
    space: TaylorHoodSpace
    ops: object
    solver: SaddleSolver
    traj: object
    collocation: object = None
    interpolation: object = None


def solve_level(level, problem=None, f=None, solver_tol=1e-10, n0=4, tau0=1.0, T=None,
                variants=VARIANTS, setup=TABLE_SETUP):
    """Run the scheme and the requested post-processings on one level."""
    setup = get_setup(setup)
    problem = problem or ManufacturedSolution()
    f = f or problem.forcing
    T = problem.T if T is None else T
    n = n0 * 2 ** level
    N = int(round(T / tau0)) * 2 ** level
    space = TaylorHoodSpace(build_unit_square(n))
    ops = assemble_operators(space)
    solver = SaddleSolver(ops, tol=solver_tol)
    tm = TimeMesh.uniform(T, N)
    u0h = np.zeros(space.n_u)
    traj = march(u0h, tm, f, ops, solver, load_rule=setup.load_rule, load_points=setup.load_points)
    sol = LevelSolution(level, space, ops, solver, traj)
    if COLLOCATION in variants:
        build = collocation_local if setup.collocation == "local" else collocation_extend
        sol.collocation = build(traj, f, ops, solver)
    if INTERPOLATION in variants:
        sol.interpolation = InterpolationTrajectory(traj)
    return sol


def level_errors(sol: LevelSolution, variant, problem=None, time_points=5, space_points=5):
    """The nine error norms (three families x three quantities) on one level."""
    problem = problem or ManufacturedSolution()
    ev = ErrorEvaluator(sol.space, space_points)
    traj = sol.traj
    tm = traj.time_mesh
    N = tm.N

    def u_err(coeffs, t):
        return ev.h1semi(VELOCITY, coeffs, lambda x: problem.grad_u(x, t))

    def dtu_err(coeffs, t):
        return ev.l2(VELOCITY, coeffs, lambda x: problem.dt_u(x, t))

    def p_err(coeffs, t):
        return ev.l2(PRESSURE, coeffs, lambda x: problem.p(x, t))

    if variant == COLLOCATION:
        ct = sol.collocation
        u_at = lambda t, n: eval_u_tilde(ct, t, n)
        dtu_at = lambda t, n: eval_dt_u_tilde(ct, t, n)
        p_at = lambda t, n: eval_p_tilde(ct, t, n)
    elif variant == INTERPOLATION:
        it = sol.interpolation
        u_at = lambda t, n: eval_velocity(traj, t)
        dtu_at = lambda t, n: traj.slope(n)
        p_at = lambda t, n: it.eval_on(max(n, 2), t)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    errors = {}
    errors[("L2", "u_H1")] = time_l2_norm(lambda t, n: u_err(u_at(t, n), t), tm, time_points)
    errors[("L2", "dtu_L2")] = time_l2_norm(lambda t, n: dtu_err(dtu_at(t, n), t), tm, time_points)
    errors[("L2", "p_L2")] = time_l2_norm(lambda t, n: p_err(p_at(t, n), t), tm, time_points)

    mids, nodes = tm.midpoints, tm.nodes
    for family, times in (("lbar2", mids), ("l2plus", nodes[:-1])):
        samples = {q: np.zeros(N) for q in QUANTITIES}
        for m in range(1, N + 1):
            t = times[m - 1]
            samples["u_H1"][m - 1] = u_err(u_at(t, m), t)
            samples["dtu_L2"][m - 1] = dtu_err(dtu_at(t, m), t)
            samples["p_L2"][m - 1] = p_err(p_at(t, m), t)
        for q in QUANTITIES:
            errors[(family, q)] = _weighted_rss(samples[q], tm)
    return errors


def run_convergence_study(levels, variant=None, solver_tol=1e-10, time_points=5, space_points=5,
                          problem=None, f=None, setup=TABLE_SETUP):
    """Errors and EOCs over refinement levels.

    ``variant`` is one of ``"collocation"``, ``"interpolation"`` or ``None``
    for both; a single report is returned for a single variant, otherwise a
    dict keyed by variant.  Level ``l`` uses an ``(4 * 2^l)^2`` mesh and
    ``tau = 2^-l`` on ``(0, 2]``.  ``setup`` picks a :class:`SchemeSetup`
    (or its name).
    """
    levels = list(levels)
    if not levels:
        raise ValueError("no levels requested")
    variants = VARIANTS if variant in (None, "both") else (variant,)
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    setup = get_setup(setup)
    reports = {v: ConvergenceReport(v, setup=setup.name) for v in variants}
    for level in levels:
        try:
            sol = solve_level(level, problem=problem, f=f, solver_tol=solver_tol, variants=variants,
                              setup=setup)
        except SaddleSolveError as exc:
            raise SaddleSolveError(f"level {level}: {exc}") from exc
        for v in variants:
            errs = level_errors(sol, v, problem, time_points, space_points)
            reports[v].records.append(
                LevelRecord(level, float(sol.traj.time_mesh.tau[0]), sol.space.mesh.h, errs)
            )
    for rep in reports.values():
        rep.fill_eocs()
    return reports[variants[0]] if len(variants) == 1 else reports
