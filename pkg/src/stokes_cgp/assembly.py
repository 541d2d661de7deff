"""Sparse assembly of the Stokes operators and load vectors.

All cells of a structured mesh share the same affine map (a scaling by
``1/n`` plus a shift), so the element matrices are computed once on the
reference cell and scattered into every cell.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fem import Q1, Q2, SpatialQuadrature, TaylorHoodSpace, gauss_rule_2d


@dataclass(frozen=True)
class StokesOperators:
    """Velocity mass ``M_u``, stiffness ``A``, divergence ``B`` and pressure mass.

    ``M_u`` and ``A`` are the plain assembled matrices over all velocity
    DOFs; the Dirichlet elimination happens in :mod:`stokes_cgp.linsolve`.
    ``B`` represents ``b(v, q) = -(div v, q)`` with columns of boundary
    velocity DOFs removed, i.e. it only acts on functions with zero trace.
    """

    space: TaylorHoodSpace
    M_u: sp.csr_matrix
    A: sp.csr_matrix
    B: sp.csr_matrix
    M_p: sp.csr_matrix
    mean_vec: np.ndarray

    @property
    def n_u(self) -> int:
        return self.space.n_u

    @property
    def n_p(self) -> int:
        return self.space.n_p


def check_csr(mat) -> None:
    """Raise ``ValueError`` if ``mat`` violates the CSR structural invariants."""
    mat = sp.csr_matrix(mat)
    n_rows, n_cols = mat.shape
    ptr, idx = mat.indptr, mat.indices
    if ptr.size != n_rows + 1 or ptr[0] != 0 or ptr[-1] != idx.size:
        raise ValueError("row offsets inconsistent with the stored entries")
    if np.any(np.diff(ptr) < 0):
        raise ValueError("row offsets are not monotone")
    if idx.size and (idx.min() < 0 or idx.max() >= n_cols):
        raise ValueError("column index out of range")
    for r in range(n_rows):
        row = idx[ptr[r]:ptr[r + 1]]
        if np.any(np.diff(row) <= 0):
            raise ValueError(f"column indices of row {r} are not strictly increasing")


def _scatter(rows, cols, local, shape):
    n_cells = rows.shape[0]
    r = np.broadcast_to(rows[:, :, None], (n_cells, rows.shape[1], cols.shape[1]))
    c = np.broadcast_to(cols[:, None, :], r.shape)
    data = np.broadcast_to(local, r.shape)
    mat = sp.coo_matrix((data.ravel(), (r.ravel(), c.ravel())), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def reference_matrices(quad: SpatialQuadrature, cell_width: float):
    """Element matrices of a square cell of side ``cell_width``.

    Returns the scalar Q2 mass and stiffness, the divergence block
    ``-(div phi_j, psi_i)`` of shape ``(4, 18)`` and the Q1 mass.
    """
    w = quad.weights
    det = cell_width ** 2
    inv = 1.0 / cell_width
    n2, g2 = Q2.tabulate(quad.points)
    n1, _ = Q1.tabulate(quad.points)
    mass2 = det * np.einsum("q,qi,qj->ij", w, n2, n2)
    stiff2 = det * inv ** 2 * np.einsum("q,qid,qjd->ij", w, g2, g2)
    div_x = -det * inv * np.einsum("q,qi,qj->ij", w, n1, g2[:, :, 0])
    div_y = -det * inv * np.einsum("q,qi,qj->ij", w, n1, g2[:, :, 1])
    mass1 = det * np.einsum("q,qi,qj->ij", w, n1, n1)
    return mass2, stiff2, np.hstack([div_x, div_y]), mass1


def assemble_operators(space: TaylorHoodSpace, quad: SpatialQuadrature | None = None) -> StokesOperators:
    if quad is None:
        quad = gauss_rule_2d(3)
    if round(np.sqrt(quad.n_points)) < 3:
        raise ValueError("assembly needs at least 3 Gauss points per axis")
    mass2, stiff2, div, mass1 = reference_matrices(quad, space.mesh.cell_width)

    zero = np.zeros_like(mass2)
    mass_vec = np.block([[mass2, zero], [zero, mass2]])
    stiff_vec = np.block([[stiff2, zero], [zero, stiff2]])
    vdofs = space.cell_velocity_dofs
    pdofs = space.cell_pressure_dofs

    M_u = _scatter(vdofs, vdofs, mass_vec, (space.n_u, space.n_u))
    A = _scatter(vdofs, vdofs, stiff_vec, (space.n_u, space.n_u))
    B = _scatter(pdofs, vdofs, div, (space.n_p, space.n_u))
    B = (B @ sp.diags(space.interior_mask.astype(float))).tocsr()
    B.eliminate_zeros()
    B.sort_indices()
    M_p = _scatter(pdofs, pdofs, mass1, (space.n_p, space.n_p))
    mean_vec = np.asarray(M_p.sum(axis=0)).ravel()
    return StokesOperators(space, M_u, A, B, M_p, mean_vec)


def assemble_load(space: TaylorHoodSpace, quad: SpatialQuadrature | None, f, zero_boundary=True) -> np.ndarray:
    """``(f, phi_i)`` for every velocity DOF.

    Boundary entries are zeroed unless ``zero_boundary`` is false, in which
    case the raw integrals against all basis functions are returned.
    """
    if quad is None:
        quad = gauss_rule_2d(3)
    pts = space.physical_points(quad.points)
    n_cells, m, _ = pts.shape
    vals = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(n_cells, m, 2)
    shape, _ = Q2.tabulate(quad.points)
    det = space.mesh.cell_width ** 2
    local = det * np.einsum("q,cqd,qk->cdk", quad.weights, vals, shape)
    out = np.zeros(space.n_u)
    np.add.at(out, space.cell_q2, local[:, 0, :])
    np.add.at(out, space.cell_q2 + space.n_q2, local[:, 1, :])
    if zero_boundary:
        out[space.boundary_velocity_dofs] = 0.0
    return out


def assemble_gradient_load(space: TaylorHoodSpace, quad: SpatialQuadrature | None, grad_g) -> np.ndarray:
    """``(grad g, grad phi_i)`` for a vector field given through its gradient.

    ``grad_g`` maps ``(m, 2)`` points to ``(m, 2, 2)`` with
    ``[..., c, d] = d g_c / d x_d``.
    """
    if quad is None:
        quad = gauss_rule_2d(3)
    pts = space.physical_points(quad.points)
    n_cells, m, _ = pts.shape
    vals = np.asarray(grad_g(pts.reshape(-1, 2)), dtype=float).reshape(n_cells, m, 2, 2)
    _, grads = Q2.tabulate(quad.points)
    h = space.mesh.cell_width
    local = h * np.einsum("q,cqed,qkd->cek", quad.weights, vals, grads)
    out = np.zeros(space.n_u)
    np.add.at(out, space.cell_q2, local[:, 0, :])
    np.add.at(out, space.cell_q2 + space.n_q2, local[:, 1, :])
    out[space.boundary_velocity_dofs] = 0.0
    return out
