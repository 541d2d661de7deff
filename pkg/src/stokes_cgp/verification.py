"""Cross-module invariant checks behind ``stokes-cgp verify``.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all
on small meshes.  The divergence check measures ``B u`` with a freshly
assembled operator rather than the one the solver was given, so a corrupted
divergence block is caught.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .analysis import ManufacturedSolution
from .assembly import assemble_gradient_load, assemble_load, assemble_operators
from .fem import TaylorHoodSpace, gauss_rule_2d
from .linsolve import SaddleSolver
from .mesh import build_unit_square
from .postprocess import collocation_extend, collocation_init, collocation_residuals, eval_dt_u_tilde, eval_p_tilde
from .timestepping import (
    TimeMesh,
    initial_acceleration,
    initial_stokes_data,
    march,
    quad_gauss_lobatto,
    quad_gauss_midpoint,
    step,
)

FAULTS = ("flip-divergence",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def inject_fault(ops, fault):
    """Return a corrupted copy of ``ops`` for fault-injection runs."""
    if fault is None:
        return ops
    if fault == "flip-divergence":
        n_q2 = ops.space.n_q2
        signs = np.ones(ops.n_u)
        signs[:n_q2] = -1.0
        return replace(ops, B=(ops.B @ sp.diags(signs)).tocsr())
    raise ValueError(f"unknown fault {fault!r}; known faults: {', '.join(FAULTS)}")


def dense_saddle_solve(ops, alpha, beta, g):
    """Brute-force reference: dense solve with Dirichlet DOFs removed."""
    interior = np.flatnonzero(ops.space.interior_mask)
    K = (alpha * ops.M_u + beta * ops.A).toarray()[np.ix_(interior, interior)]
    B = ops.B.toarray()[:, interior]
    m = ops.mean_vec
    ni, n_p = interior.size, ops.n_p
    mat = np.zeros((ni + n_p + 1, ni + n_p + 1))
    mat[:ni, :ni] = K
    mat[:ni, ni:ni + n_p] = B.T
    mat[ni:ni + n_p, :ni] = B
    mat[ni:ni + n_p, -1] = m
    mat[-1, ni:ni + n_p] = m
    rhs = np.zeros(ni + n_p + 1)
    rhs[:ni] = np.asarray(g)[interior]
    x = np.linalg.solve(mat, rhs)
    u = np.zeros(ops.n_u)
    u[interior] = x[:ni]
    return u, x[ni:ni + n_p]


def _rel(u, p, u_ref, p_ref):
    """Relative difference of the stacked solution vectors."""
    ref = np.concatenate([u_ref, p_ref])
    diff = np.concatenate([u, p]) - ref
    return float(np.linalg.norm(diff) / max(np.linalg.norm(ref), 1e-300))


def check_time_quadrature(rng, samples=100):
    worst = 0.0
    for _ in range(samples):
        c0, c1 = rng.normal(size=2)
        t0 = rng.uniform(0.0, 1.0)
        tau = rng.uniform(0.05, 1.0)
        g = lambda t: c0 + c1 * t
        exact = c0 * tau + 0.5 * c1 * ((t0 + tau) ** 2 - t0 ** 2)
        for approx in (quad_gauss_lobatto(g(t0), g(t0 + tau), tau), quad_gauss_midpoint(g(t0 + 0.5 * tau), tau)):
            worst = max(worst, abs(approx - exact) / max(abs(exact), 1.0))
    return CheckResult("time quadrature P1 exactness", worst <= 1e-13, f"max rel err {worst:.1e}")


def check_space_quadrature():
    worst = 0.0
    for k in range(1, 6):
        rule = gauss_rule_2d(k)
        for a in range(2 * k):
            for b in range(2 * k):
                val = rule.weights @ (rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                worst = max(worst, abs(val - 1.0 / ((a + 1) * (b + 1))))
    return CheckResult("spatial Gauss exactness", worst <= 1e-13, f"max err {worst:.1e}")


def check_divergence(traj, reference_ops):
    worst = 0.0
    for ubar in traj.u_mid:
        scale = max(np.max(np.abs(ubar)), 1.0)
        worst = max(worst, np.max(np.abs(reference_ops.B @ ubar)) / scale)
    return CheckResult("discrete divergence-freeness", worst <= 1e-9, f"max |B ubar| {worst:.1e}")


def check_continuity(ct):
    nodes = ct.time_mesh.nodes
    jump_u = jump_p = 0.0
    for n in range(1, ct.traj.N):
        t = nodes[n]
        jump_u = max(jump_u, np.max(np.abs(eval_dt_u_tilde(ct, t, n) - eval_dt_u_tilde(ct, t, n + 1))))
        jump_p = max(jump_p, np.max(np.abs(eval_p_tilde(ct, t, n) - eval_p_tilde(ct, t, n + 1))))
    ok = jump_u <= 1e-10 and jump_p <= 1e-10
    return CheckResult("C1 velocity / C0 pressure continuity", ok, f"jumps {jump_u:.1e}, {jump_p:.1e}")


def check_collocation(ct, f, ops):
    res = collocation_residuals(ct, f, ops)
    scale = max(
        max(np.max(np.abs(assemble_load(ops.space, None, lambda x: f(x, t)))) for t in ct.time_mesh.nodes), 1.0
    )
    worst = float(np.max(res)) / scale
    return CheckResult("collocation residual at time nodes", worst <= 1e-8, f"max scaled residual {worst:.1e}")


def check_oracle(problem, fault=None):
    """Every kind of saddle solve on a 2x2 mesh against the dense reference."""
    space = TaylorHoodSpace(build_unit_square(2))
    ops = inject_fault(assemble_operators(space), fault)
    solver = SaddleSolver(ops)
    f = problem.forcing
    tm = TimeMesh.uniform(1.0, 2)
    traj = march(np.zeros(space.n_u), tm, f, ops, solver)
    worst = 0.0
    for n in range(1, tm.N + 1):
        t0, tau = tm.nodes[n - 1], tm.tau[n - 1]
        ubar, pbar = step(traj.u_nodes[n - 1], t0, tau, f, ops, solver)
        g = ops.M_u @ traj.u_nodes[n - 1] + 0.25 * tau * (
            assemble_load(space, None, lambda x: f(x, t0)) + assemble_load(space, None, lambda x: f(x, t0 + tau))
        )
        u_ref, p_ref = dense_saddle_solve(ops, 1.0, 0.5 * tau, g)
        worst = max(worst, _rel(ubar, pbar * 0.5 * tau, u_ref, p_ref))
    a0, p0 = collocation_init(traj, f, ops, solver)
    g = assemble_load(space, None, lambda x: f(x, 0.0)) - ops.A @ traj.u_nodes[0]
    u_ref, p_ref = dense_saddle_solve(ops, 1.0, 0.0, g)
    worst = max(worst, _rel(a0, p0, u_ref, p_ref))
    a0h, s0 = initial_acceleration(problem.initial_data_grad, ops, solver)
    u_ref, p_ref = dense_saddle_solve(ops, 0.0, 1.0, assemble_gradient_load(space, None, problem.initial_data_grad))
    worst = max(worst, _rel(a0h, s0, u_ref, p_ref))
    u0h, p0h = initial_stokes_data(a0h, lambda x: f(x, 0.0), ops, solver)
    g = assemble_load(space, None, lambda x: f(x, 0.0)) - ops.M_u @ a0h
    u_ref, p_ref = dense_saddle_solve(ops, 0.0, 1.0, g)
    worst = max(worst, _rel(u0h, p0h, u_ref, p_ref))
    return CheckResult("dense oracle on 2x2 mesh", worst <= 1e-10, f"max rel diff {worst:.1e}")


def forcing_fd_error(problem, x, t, h=1e-4):
    """Centered-difference reconstruction of ``dt u - Laplace u + grad p`` at one point."""
    x = np.asarray(x, dtype=float).reshape(1, 2)
    ex, ey = np.array([[h, 0.0]]), np.array([[0.0, h]])
    dt = (problem.u(x, t + h) - problem.u(x, t - h)) / (2 * h)
    lap = (
        problem.u(x + ex, t) + problem.u(x - ex, t) + problem.u(x + ey, t) + problem.u(x - ey, t) - 4 * problem.u(x, t)
    ) / h ** 2
    grad = np.array([
        (problem.p(x + ex, t) - problem.p(x - ex, t))[0],
        (problem.p(x + ey, t) - problem.p(x - ey, t))[0],
    ]) / (2 * h)
    fd = dt[0] - lap[0] + grad
    return float(np.max(np.abs(problem.forcing(x, t)[0] - fd)))


def check_forcing(problem, rng, samples=20):
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(0.05, 0.95, size=2)
        t = rng.uniform(0.05, problem.T - 0.05)
        worst = max(worst, forcing_fd_error(problem, x, t))
    return CheckResult("forcing vs finite differences", worst <= 1e-6, f"max err {worst:.1e}")


def check_zero_problem(ops, solver):
    zero = lambda x, t: np.zeros((np.atleast_2d(x).shape[0], 2))
    tm = TimeMesh.uniform(1.0, 3)
    traj = march(np.zeros(ops.n_u), tm, zero, ops, solver)
    ct = collocation_extend(traj, zero, ops, solver)
    arrays = (traj.u_nodes, traj.u_mid, traj.p_mid, ct.c, ct.a, ct.p_nodes)
    ok = all(not np.any(a) for a in arrays)
    return CheckResult("zero data gives zero output", ok)


def run_checks(seed=0, fault=None):
    """Run the whole suite; returns a list of :class:`CheckResult`."""
    rng = np.random.default_rng(seed)
    problem = ManufacturedSolution()
    f = problem.forcing
    space = TaylorHoodSpace(build_unit_square(4))
    clean_ops = assemble_operators(space)
    ops = inject_fault(clean_ops, fault)
    solver = SaddleSolver(ops)
    traj = march(np.zeros(space.n_u), TimeMesh.uniform(problem.T, 4), f, ops, solver)
    ct = collocation_extend(traj, f, ops, solver)
    return [
        check_time_quadrature(rng),
        check_space_quadrature(),
        check_divergence(traj, clean_ops),
        check_continuity(ct),
        check_collocation(ct, f, ops),
        check_oracle(problem, fault),
        check_forcing(problem, rng),
        check_zero_problem(ops, solver),
    ]
