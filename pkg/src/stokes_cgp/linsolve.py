"""Direct solver for the Stokes-type saddle-point systems.

Every system solved by the package has the form::

    [ K    B^T  0 ] [u]   [g]
    [ B    0    m ] [p] = [0]
    [ 0    m^T  0 ] [l]   [0]

with ``K = alpha * M_u + beta * A`` and ``m`` the vector of pressure basis
integrals.  The scalar multiplier ``l`` pins the pressure to zero mean; it
vanishes for every right-hand side because ``1^T B = 0``.  Dirichlet rows
of ``K`` are replaced by identity rows and the matching columns dropped.
"""

import threading

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import StokesOperators


class SaddleSolveError(RuntimeError):
    """Factorization failed or the solve missed the residual tolerance."""


def augmented_matrix(ops: StokesOperators, alpha: float, beta: float) -> sp.csc_matrix:
    """Assemble the full augmented matrix for ``K = alpha M_u + beta A``."""
    space = ops.space
    interior = sp.diags(space.interior_mask.astype(float))
    pinned = sp.diags(space.boundary_mask.astype(float))
    K = interior @ (alpha * ops.M_u + beta * ops.A) @ interior + pinned
    m = sp.csr_matrix(ops.mean_vec.reshape(-1, 1))
    return sp.bmat(
        [[K, ops.B.T, None], [ops.B, None, m], [None, m.T, None]], format="csc"
    )


class SaddleSolver:
    """Factorise-once, solve-many wrapper around SuperLU.

    Factorizations are cached per ``(alpha, beta)`` pair; the cache is
    guarded by a lock so a solver may be shared between threads.
    """

    def __init__(self, ops: StokesOperators, tol: float = 1e-10):
        self.ops = ops
        self.tol = tol
        self._cache = {}
        self._lock = threading.Lock()

    def _factor(self, alpha, beta):
        key = (float(alpha), float(beta))
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                mat = augmented_matrix(self.ops, *key)
                try:
                    lu = spla.splu(mat, permc_spec="COLAMD")
                except RuntimeError as exc:
                    raise SaddleSolveError(
                        f"singular saddle-point matrix for alpha={alpha}, beta={beta}: {exc}"
                    ) from exc
                entry = (mat, lu)
                self._cache[key] = entry
        return entry

    def solve_full(self, alpha: float, beta: float, g):
        """Return ``(u, p, multiplier)``."""
        if alpha < 0 or beta < 0 or (alpha == 0 and beta == 0):
            raise ValueError(f"need alpha, beta >= 0 and not both zero, got ({alpha}, {beta})")
        ops = self.ops
        n_u, n_p = ops.n_u, ops.n_p
        g = np.asarray(g, dtype=float)
        if g.shape != (n_u,):
            raise ValueError(f"right-hand side must have length {n_u}")
        rhs = np.zeros(n_u + n_p + 1)
        rhs[:n_u] = np.where(ops.space.boundary_mask, 0.0, g)
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm == 0.0:
            return np.zeros(n_u), np.zeros(n_p), 0.0

        mat, lu = self._factor(alpha, beta)
        x = lu.solve(rhs)
        res = rhs - mat @ x
        if np.linalg.norm(res) > self.tol * rhs_norm:
            # one step of iterative refinement
            x += lu.solve(res)
            res = rhs - mat @ x
        rel = np.linalg.norm(res) / rhs_norm
        if not np.isfinite(rel) or rel > self.tol:
            raise SaddleSolveError(
                f"relative residual {rel:.3e} exceeds tolerance {self.tol:.1e} "
                f"(alpha={alpha}, beta={beta})"
            )
        return x[:n_u], x[n_u:n_u + n_p], float(x[-1])

    def solve(self, alpha: float, beta: float, g):
        """Solve the saddle system and return ``(u, p)`` with mean-free ``p``."""
        u, p, _ = self.solve_full(alpha, beta, g)
        return u, p
