"""Q1/Q2 reference elements, Gauss quadrature and the Taylor-Hood space.

Field callables used throughout the package are vectorised: they take an
array of points of shape ``(m, 2)`` and return ``(m,)`` for scalars or
``(m, 2)`` for vectors.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .mesh import StructuredQuadMesh


class ElementKind(str, Enum):
    Q1 = "Q1"
    Q2 = "Q2"


VELOCITY = "velocity"
PRESSURE = "pressure"

# Q1 nodes counterclockwise; Q2 nodes on a 3x3 lattice, x fastest.
_Q1_NODES = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
_Q2_NODES = np.array([[a / 2.0, b / 2.0] for b in range(3) for a in range(3)])


def _lagrange_1d_quadratic(s):
    s = np.asarray(s, dtype=float)
    vals = np.stack([2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5)], axis=-1)
    ders = np.stack([4.0 * s - 3.0, -8.0 * s + 4.0, 4.0 * s - 1.0], axis=-1)
    return vals, ders


@dataclass(frozen=True)
class ReferenceElement:
    kind: ElementKind
    nodes: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def tabulate(self, points):
        """Shape values ``(m, k)`` and reference gradients ``(m, k, 2)`` at ``points``."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        xi, eta = p[:, 0], p[:, 1]
        if self.kind is ElementKind.Q1:
            lx = np.stack([1.0 - xi, xi], axis=-1)
            ly = np.stack([1.0 - eta, eta], axis=-1)
            dl = np.array([-1.0, 1.0])
            ia = np.array([0, 1, 1, 0])
            ib = np.array([0, 0, 1, 1])
            vals = lx[:, ia] * ly[:, ib]
            gx = dl[ia][None, :] * ly[:, ib]
            gy = lx[:, ia] * dl[ib][None, :]
        else:
            lx, dlx = _lagrange_1d_quadratic(xi)
            ly, dly = _lagrange_1d_quadratic(eta)
            ia = np.tile(np.arange(3), 3)
            ib = np.repeat(np.arange(3), 3)
            vals = lx[:, ia] * ly[:, ib]
            gx = dlx[:, ia] * ly[:, ib]
            gy = lx[:, ia] * dly[:, ib]
        return vals, np.stack([gx, gy], axis=-1)


Q1 = ReferenceElement(ElementKind.Q1, _Q1_NODES)
Q2 = ReferenceElement(ElementKind.Q2, _Q2_NODES)


def reference_element(kind) -> ReferenceElement:
    return Q1 if ElementKind(kind) is ElementKind.Q1 else Q2


def eval_shape(kind, reference_point):
    """Values and reference gradients of all shape functions at one point."""
    vals, grads = reference_element(kind).tabulate(reference_point)
    return vals[0], grads[0]


@dataclass(frozen=True)
class SpatialQuadrature:
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.weights.size


def gauss_rule_2d(k: int) -> SpatialQuadrature:
    """Tensor ``k x k`` Gauss-Legendre rule on the reference cell ``[0, 1]^2``."""
    if int(k) != k or not 1 <= k <= 6:
        raise ValueError(f"points_per_axis must be in 1..6, got {k!r}")
    x, w = np.polynomial.legendre.leggauss(int(k))
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    px, py = np.meshgrid(x, x, indexing="xy")
    wx, wy = np.meshgrid(w, w, indexing="xy")
    return SpatialQuadrature(np.column_stack([px.ravel(), py.ravel()]), (wx * wy).ravel())


class TaylorHoodSpace:
    """Q2 velocity / Q1 pressure pair on a structured mesh.

    Velocity DOFs are component-blocked: ``c * n_q2 + k`` is component ``c``
    at Q2 node ``k``.  Q2 nodes sit on the ``(2n+1)^2`` lattice, Q1 nodes
    coincide with the mesh vertices.  Boundary velocity DOFs keep their
    numbers and are pinned to zero by the solver.
    """

    def __init__(self, mesh: StructuredQuadMesh):
        self.mesh = mesh
        n = mesh.n
        m = 2 * n + 1
        self.n_q2 = m * m
        self.n_q1 = (n + 1) ** 2
        self.n_u = 2 * self.n_q2
        self.n_p = self.n_q1

        grid = np.linspace(0.0, 1.0, m)
        gx, gy = np.meshgrid(grid, grid, indexing="xy")
        self.q2_coords = np.column_stack([gx.ravel(), gy.ravel()])
        self.q1_coords = mesh.vertices

        jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        base = (2 * jj * m + 2 * ii).ravel()
        local = np.array([b * m + a for b in range(3) for a in range(3)])
        self.cell_q2 = base[:, None] + local[None, :]
        self.cell_velocity_dofs = np.hstack([self.cell_q2, self.cell_q2 + self.n_q2])
        self.cell_pressure_dofs = mesh.cells

        on_bnd = (
            (np.abs(self.q2_coords) <= 1e-14) | (np.abs(self.q2_coords - 1.0) <= 1e-14)
        ).any(axis=1)
        self.boundary_q2 = np.flatnonzero(on_bnd)
        self.boundary_velocity_dofs = np.concatenate([self.boundary_q2, self.boundary_q2 + self.n_q2])
        mask = np.zeros(self.n_u, dtype=bool)
        mask[self.boundary_velocity_dofs] = True
        self.boundary_mask = mask
        self.interior_mask = ~mask

    def __repr__(self):
        return f"TaylorHoodSpace(n={self.mesh.n}, n_u={self.n_u}, n_p={self.n_p})"

    def physical_points(self, ref_points):
        """Physical coordinates of reference points in every cell, ``(n_cells, m, 2)``."""
        h = self.mesh.cell_width
        return self.mesh.cell_origins()[:, None, :] + h * np.asarray(ref_points)[None, :, :]

    def cell_values(self, component, coeffs, ref_points, derivative=False):
        """Evaluate an FE function at reference points of every cell.

        Returns values with shape ``(n_cells, m)`` for the pressure or
        ``(n_cells, m, 2)`` for the velocity; with ``derivative=True`` the
        physical gradient is returned instead, adding a trailing axis of 2.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        scale = self.mesh.n
        if component == PRESSURE:
            vals, grads = Q1.tabulate(ref_points)
            local = coeffs[self.cell_pressure_dofs]
            if derivative:
                return scale * np.einsum("ck,mkd->cmd", local, grads)
            return local @ vals.T
        vals, grads = Q2.tabulate(ref_points)
        ux = coeffs[self.cell_q2]
        uy = coeffs[self.cell_q2 + self.n_q2]
        if derivative:
            gux = scale * np.einsum("ck,mkd->cmd", ux, grads)
            guy = scale * np.einsum("ck,mkd->cmd", uy, grads)
            return np.stack([gux, guy], axis=2)
        return np.stack([ux @ vals.T, uy @ vals.T], axis=-1)


def interpolate_nodal(space: TaylorHoodSpace, component, f):
    """Sample ``f`` at the global nodes of the requested component.

    Velocity boundary DOFs are set to zero.  No mean correction is applied
    to pressures.
    """
    if component == PRESSURE:
        return np.asarray(f(space.q1_coords), dtype=float).reshape(space.n_p).copy()
    if component != VELOCITY:
        raise ValueError(f"unknown component {component!r}")
    vals = np.asarray(f(space.q2_coords), dtype=float).reshape(space.n_q2, 2)
    out = np.concatenate([vals[:, 0], vals[:, 1]])
    out[space.boundary_velocity_dofs] = 0.0
    return out


def eval_fe_function(space: TaylorHoodSpace, component, coeffs, physical_point):
    """Point value of an FE function (scalar for pressure, 2-vector for velocity)."""
    cell, ref = space.mesh.locate(physical_point)
    coeffs = np.asarray(coeffs, dtype=float)
    if component == PRESSURE:
        vals, _ = eval_shape(ElementKind.Q1, ref)
        return float(coeffs[space.cell_pressure_dofs[cell]] @ vals)
    if component != VELOCITY:
        raise ValueError(f"unknown component {component!r}")
    vals, _ = eval_shape(ElementKind.Q2, ref)
    dofs = space.cell_q2[cell]
    return np.array([coeffs[dofs] @ vals, coeffs[dofs + space.n_q2] @ vals])


def evaluate_points(space: TaylorHoodSpace, component, coeffs, points):
    """Vectorised :func:`eval_fe_function` over an ``(m, 2)`` array of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts < -1e-14) or np.any(pts > 1 + 1e-14):
        raise ValueError("points outside the unit square")
    n = space.mesh.n
    ij = np.clip(np.floor(pts * n).astype(int), 0, n - 1)
    ref = np.clip(pts * n - ij, 0.0, 1.0)
    cells = ij[:, 1] * n + ij[:, 0]
    coeffs = np.asarray(coeffs, dtype=float)
    if component == PRESSURE:
        vals, _ = Q1.tabulate(ref)
        return np.einsum("mk,mk->m", coeffs[space.cell_pressure_dofs[cells]], vals)
    vals, _ = Q2.tabulate(ref)
    dofs = space.cell_q2[cells]
    return np.column_stack([
        np.einsum("mk,mk->m", coeffs[dofs], vals),
        np.einsum("mk,mk->m", coeffs[dofs + space.n_q2], vals),
    ])
