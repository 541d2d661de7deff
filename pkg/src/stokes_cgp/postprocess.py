"""Pressure post-processing: collocation lifting and midpoint interpolation.

Collocation
    On each interval the velocity is lifted by a quadratic bubble in time,
    ``utilde(t) = u(t) + c_n theta_n(t)``, and the pressure is replaced by the
    line through ``(t_{n-1}, ptilde^{n-1})`` and ``(tbar_n, pbar^n)``.  The
    data ``(a^0, ptilde^0)`` come from one mass-matrix saddle solve at
    ``t_0``; all later nodal values follow from explicit recurrences.

Interpolation
    The pressure on ``I_n`` (``n >= 2``) is the line through the midpoint
    values of ``I_{n-1}`` and ``I_n``; on the first interval the line through
    the first two midpoint values is extrapolated.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import StokesOperators, assemble_load
from .linsolve import SaddleSolver
from .timestepping import DiscreteTrajectory, TimeMesh


def theta(t_prev: float, t_next: float, t: float) -> float:
    """Quadratic bubble vanishing at both ends with unit slope at ``t_prev``."""
    return -(t - t_prev) * (t - t_next) / (t_next - t_prev)


def theta_dt(t_prev: float, t_next: float, t: float) -> float:
    return -(2.0 * t - t_prev - t_next) / (t_next - t_prev)


@dataclass
class CollocationTrajectory:
    """Lifted velocity and continuous pressure.

    ``c[n-1]`` is the lifting coefficient of interval ``n``; ``a[n]`` and
    ``p_nodes[n]`` are the acceleration and pressure at ``t_n``.
    """

    traj: DiscreteTrajectory
    c: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    p_nodes: np.ndarray = field(repr=False)

    @property
    def time_mesh(self) -> TimeMesh:
        return self.traj.time_mesh


def collocation_init(traj: DiscreteTrajectory, f, ops: StokesOperators, solver: SaddleSolver, quad=None):
    """Acceleration and pressure at ``t_0`` from the collocation condition.

    Solves ``(a, v) + b(v, p) = (f(t_0), v) - a(u^0, v)``, ``b(a, q) = 0``.
    """
    t0 = traj.time_mesh.nodes[0]
    rhs = assemble_load(ops.space, quad, lambda x: f(x, t0)) - ops.A @ traj.u_nodes[0]
    return solver.solve(1.0, 0.0, rhs)


def collocation_extend(traj: DiscreteTrajectory, f, ops: StokesOperators, solver: SaddleSolver,
                       init=None, quad=None) -> CollocationTrajectory:
    """Build the full collocation trajectory; ``init`` may supply ``(a^0, ptilde^0)``."""
    if init is None:
        init = collocation_init(traj, f, ops, solver, quad)
    a0, p0 = init
    N = traj.N
    c = np.zeros((N, ops.n_u))
    a = np.zeros((N + 1, ops.n_u))
    p_nodes = np.zeros((N + 1, ops.n_p))
    a[0] = a0
    p_nodes[0] = p0
    for n in range(1, N + 1):
        slope = traj.slope(n)
        c[n - 1] = a[n - 1] - slope
        a[n] = slope - c[n - 1]
        p_nodes[n] = 2.0 * traj.p_mid[n - 1] - p_nodes[n - 1]
    return CollocationTrajectory(traj, c, a, p_nodes)


def collocation_local(traj: DiscreteTrajectory, f, ops: StokesOperators, solver: SaddleSolver,
                      quad=None) -> CollocationTrajectory:
    """Collocation with one mass-matrix saddle solve at every ``t_{n-1}``.

    With the trapezoidal load this coincides with :func:`collocation_extend`
    up to round-off.  With a Gauss-integrated load the two differ and only
    this variant keeps the collocation condition at the left end of every
    interval; the lifted derivative and the pressure then jump at the nodes.
    """
    N = traj.N
    nodes = traj.time_mesh.nodes
    c = np.zeros((N, ops.n_u))
    a = np.zeros((N + 1, ops.n_u))
    p_nodes = np.zeros((N + 1, ops.n_p))
    for n in range(N + 1):
        t = nodes[n]
        rhs = assemble_load(ops.space, quad, lambda x: f(x, t)) - ops.A @ traj.u_nodes[n]
        a[n], p_nodes[n] = solver.solve(1.0, 0.0, rhs)
    for n in range(1, N + 1):
        c[n - 1] = a[n - 1] - traj.slope(n)
    return CollocationTrajectory(traj, c, a, p_nodes)


def _interval(tm: TimeMesh, t, n):
    if n is None:
        n = tm.interval_index(t)
    return n, tm.nodes[n - 1], tm.nodes[n]


def eval_u_tilde(ct: CollocationTrajectory, t: float, n: int | None = None) -> np.ndarray:
    n, t0, t1 = _interval(ct.time_mesh, t, n)
    u = ct.traj.u_nodes[n - 1] + (t - t0) * ct.traj.slope(n)
    return u + theta(t0, t1, t) * ct.c[n - 1]


def eval_dt_u_tilde(ct: CollocationTrajectory, t: float, n: int | None = None) -> np.ndarray:
    """Time derivative of the lifted velocity; ``n`` selects a one-sided limit at nodes."""
    n, t0, t1 = _interval(ct.time_mesh, t, n)
    return ct.traj.slope(n) + theta_dt(t0, t1, t) * ct.c[n - 1]


def eval_p_tilde(ct: CollocationTrajectory, t: float, n: int | None = None) -> np.ndarray:
    n, t0, t1 = _interval(ct.time_mesh, t, n)
    tm = 0.5 * (t0 + t1)
    w = (t - t0) / (tm - t0)
    return (1.0 - w) * ct.p_nodes[n - 1] + w * ct.traj.p_mid[n - 1]


def collocation_residuals(ct: CollocationTrajectory, f, ops: StokesOperators, quad=None) -> np.ndarray:
    """Max-norm residual of the strong discrete momentum equation at every ``t_n``.

    Only rows of interior velocity DOFs are tested.
    """
    interior = ops.space.interior_mask
    out = np.zeros(ct.traj.N + 1)
    for n, t in enumerate(ct.time_mesh.nodes):
        load = assemble_load(ops.space, quad, lambda x: f(x, t))
        r = ops.M_u @ ct.a[n] + ops.A @ ct.traj.u_nodes[n] + ops.B.T @ ct.p_nodes[n] - load
        out[n] = np.max(np.abs(r[interior]))
    return out


def jn_eval(q_prev, q_next, tbar_prev: float, tbar_next: float, t: float):
    """Line through ``(tbar_prev, q_prev)`` and ``(tbar_next, q_next)`` evaluated at ``t``."""
    w = (t - tbar_prev) / (tbar_next - tbar_prev)
    return q_prev + w * (np.asarray(q_next) - q_prev)


@dataclass
class InterpolationTrajectory:
    traj: DiscreteTrajectory

    def __post_init__(self):
        if self.traj.N < 2:
            raise ValueError("interpolation post-processing needs at least two intervals")

    @property
    def time_mesh(self) -> TimeMesh:
        return self.traj.time_mesh

    def operator_index(self, t: float) -> int:
        """Index of the ``J_n`` operator used at ``t`` (2 on the closed first interval)."""
        return max(self.time_mesh.interval_index(t), 2)

    def eval_on(self, n: int, t: float) -> np.ndarray:
        """``J_n`` applied to the midpoint pressures, evaluated at ``t``."""
        mids = self.time_mesh.midpoints
        return jn_eval(self.traj.p_mid[n - 2], self.traj.p_mid[n - 1], mids[n - 2], mids[n - 1], t)

    def right_limit(self, m: int) -> np.ndarray:
        """Right-sided limit at ``t_{m-1}``, i.e. the value at the left end of ``I_m``."""
        return self.eval_on(max(m, 2), self.time_mesh.nodes[m - 1])


def eval_p_interp(it: InterpolationTrajectory, t: float) -> np.ndarray:
    return it.eval_on(it.operator_index(t), t)


def check_timestep_condition(time_mesh: TimeMesh, c1: float = 2.0, c2: float = 2.0) -> bool:
    """Step-size regularity required by the interpolation variant."""
    tau = time_mesh.tau
    slack = 1.0 + 1e-12  # node differences carry rounding
    if tau.size >= 2 and tau[0] > c1 * tau[1] * slack:
        return False
    return bool(np.all(tau[1:] <= c2 * tau[:-1] * slack))
