"""Continuous piecewise-linear Galerkin-Petrov time marching.

On each interval ``I_n = (t_{n-1}, t_n]`` the velocity is linear in time and
represented by its value ``u^{n-1}`` at the left end and ``ubar^n`` at the
midpoint.  Trapezoidal quadrature of the momentum equation against
piecewise-constant test functions leaves one saddle-point problem per step
for ``(ubar^n, pbar^n)``::

    (ubar - u^{n-1}, v) + tau/2 (a(ubar, v) + b(v, pbar)) = tau/4 (f(t_{n-1}) + f(t_n), v)
    b(ubar, q) = 0

The end value follows from ``u^n = 2 ubar^n - u^{n-1}``.  Only the midpoint
pressure is unique; the left pressure coefficient is left to the
post-processing.

``load_rule="gauss"`` replaces the trapezoidal load by a Gauss rule in time,
``1/2 int_{I_n} (f, v) dt``.  That is a different scheme for non-affine-in-time
forcing; it is the one the reference error tables correspond to (see
``analysis.TABLE_SETUP``).

Time-dependent fields are callables ``f(x, t)`` with ``x`` of shape
``(m, 2)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import StokesOperators, assemble_gradient_load, assemble_load
from .linsolve import SaddleSolveError, SaddleSolver


@dataclass(frozen=True)
class TimeMesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a time mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("time mesh must start at t = 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T: float, N: int) -> "TimeMesh":
        return cls(np.linspace(0.0, T, N + 1))

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def tau(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def interval_index(self, t: float) -> int:
        """1-based index ``n`` with ``t`` in ``(t_{n-1}, t_n]``; ``t = 0`` maps to 1."""
        if t < self.nodes[0] or t > self.nodes[-1]:
            raise ValueError(f"t = {t} outside [0, {self.T}]")
        return max(int(np.searchsorted(self.nodes, t, side="left")), 1)


@dataclass
class DiscreteTrajectory:
    """Nodal velocities ``u^0..u^N`` and midpoint data ``ubar^n, pbar^n``.

    Arrays are stacked along the first axis; ``u_mid[n-1]`` and
    ``p_mid[n-1]`` belong to interval ``n``.
    """

    time_mesh: TimeMesh
    u_nodes: np.ndarray = field(repr=False)
    u_mid: np.ndarray = field(repr=False)
    p_mid: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.time_mesh.N

    def slope(self, n: int) -> np.ndarray:
        """Constant time derivative ``(u^n - u^{n-1}) / tau_n`` on interval ``n``."""
        tau = self.time_mesh.tau[n - 1]
        return (self.u_nodes[n] - self.u_nodes[n - 1]) / tau


def quad_gauss_lobatto(g_left: float, g_right: float, tau: float) -> float:
    """Trapezoidal rule on an interval of length ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return 0.5 * tau * (g_left + g_right)


def quad_gauss_midpoint(g_mid: float, tau: float) -> float:
    """One-point Gauss (midpoint) rule on an interval of length ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return tau * g_mid


LOAD_RULES = ("trapezoidal", "gauss")


def _load_at(ops, f, t, quad):
    return assemble_load(ops.space, quad, lambda x: f(x, t))


def _gauss_load(ops, f, t_prev, tau, quad, points):
    x, w = np.polynomial.legendre.leggauss(points)
    return sum(
        0.5 * wq * tau * _load_at(ops, f, t_prev + 0.5 * (xq + 1.0) * tau, quad) for xq, wq in zip(x, w)
    )


def step_with_loads(u_prev, tau, load_integral, ops: StokesOperators, solver: SaddleSolver):
    """One step given the time-integrated load ``Q_n((f, v))`` of the interval."""
    half = 0.5 * tau
    g = ops.M_u @ u_prev + 0.5 * load_integral
    u_bar, p_scaled = solver.solve(1.0, half, g)
    return u_bar, p_scaled / half


def step(u_prev, t_prev, tau, f, ops: StokesOperators, solver: SaddleSolver, quad=None,
         load_rule="trapezoidal", load_points=5):
    """Solve the space problem on ``(t_prev, t_prev + tau]``; returns ``(ubar, pbar)``."""
    if load_rule == "trapezoidal":
        integral = 0.5 * tau * (_load_at(ops, f, t_prev, quad) + _load_at(ops, f, t_prev + tau, quad))
    elif load_rule == "gauss":
        integral = _gauss_load(ops, f, t_prev, tau, quad, load_points)
    else:
        raise ValueError(f"unknown load rule {load_rule!r}")
    return step_with_loads(u_prev, tau, integral, ops, solver)


def march(u0h, time_mesh: TimeMesh, f, ops: StokesOperators, solver: SaddleSolver, quad=None,
          load_rule="trapezoidal", load_points=5) -> DiscreteTrajectory:
    """Run the scheme over all intervals of ``time_mesh``."""
    if load_rule not in LOAD_RULES:
        raise ValueError(f"unknown load rule {load_rule!r}")
    N = time_mesh.N
    u_nodes = np.zeros((N + 1, ops.n_u))
    u_mid = np.zeros((N, ops.n_u))
    p_mid = np.zeros((N, ops.n_p))
    u_nodes[0] = u0h
    load_prev = _load_at(ops, f, time_mesh.nodes[0], quad)
    for n in range(1, N + 1):
        t_prev, tau = time_mesh.nodes[n - 1], time_mesh.tau[n - 1]
        if load_rule == "trapezoidal":
            load_next = _load_at(ops, f, time_mesh.nodes[n], quad)
            integral = 0.5 * tau * (load_prev + load_next)
            load_prev = load_next
        else:
            integral = _gauss_load(ops, f, t_prev, tau, quad, load_points)
        try:
            u_bar, p_bar = step_with_loads(u_nodes[n - 1], tau, integral, ops, solver)
        except SaddleSolveError as exc:
            raise SaddleSolveError(f"time step {n} failed: {exc}") from exc
        u_mid[n - 1] = u_bar
        p_mid[n - 1] = p_bar
        u_nodes[n] = 2.0 * u_bar - u_nodes[n - 1]
    return DiscreteTrajectory(time_mesh, u_nodes, u_mid, p_mid)


def eval_velocity(traj: DiscreteTrajectory, t: float) -> np.ndarray:
    n = traj.time_mesh.interval_index(t)
    t0, t1 = traj.time_mesh.nodes[n - 1], traj.time_mesh.nodes[n]
    w = (t - t0) / (t1 - t0)
    return (1.0 - w) * traj.u_nodes[n - 1] + w * traj.u_nodes[n]


def eval_velocity_dt(traj: DiscreteTrajectory, t: float) -> np.ndarray:
    """Time derivative, taking the left limit at interior nodes."""
    return traj.slope(traj.time_mesh.interval_index(t))


def initial_acceleration(grad_g, ops: StokesOperators, solver: SaddleSolver, quad=None):
    """Stokes projection of the initial acceleration.

    ``grad_g`` is the spatial gradient of ``f(0) + Laplace u_0`` (vectorised,
    ``(m, 2) -> (m, 2, 2)``).  Returns ``(a0h, s_h)``.
    """
    rhs = assemble_gradient_load(ops.space, quad, grad_g)
    return solver.solve(0.0, 1.0, rhs)


def initial_stokes_data(a0h, f0, ops: StokesOperators, solver: SaddleSolver, quad=None):
    """Discrete initial velocity and pressure from a stationary Stokes problem.

    Solves ``a(u, v) + b(v, p) = (f0 - a0h, v)`` with ``b(u, q) = 0``.
    """
    rhs = assemble_load(ops.space, quad, f0) - ops.M_u @ a0h
    return solver.solve(0.0, 1.0, rhs)
