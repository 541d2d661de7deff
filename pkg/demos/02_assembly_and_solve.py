"""Assemble the Stokes operators and solve one generalised Stokes problem.

The solver handles ``alpha M u + beta A u + B^T p = g``, ``B u = 0`` with a
zero-mean pressure.  We compare it against a small dense solve.
"""

import numpy as np

from stokes_cgp.assembly import assemble_load, assemble_operators
from stokes_cgp.fem import TaylorHoodSpace
from stokes_cgp.linsolve import SaddleSolver
from stokes_cgp.mesh import build_unit_square
from stokes_cgp.verification import dense_saddle_solve

space = TaylorHoodSpace(build_unit_square(4))
ops = assemble_operators(space)
print(f"M_u {ops.M_u.shape}, A {ops.A.shape}, B {ops.B.shape}, nnz(A) = {ops.A.nnz}")
print("total mass of the velocity mass matrix (two components):", round(ops.M_u.sum(), 12))
print("mean functional sums to the area:", round(ops.mean_vec.sum(), 12))

g = assemble_load(space, None, lambda x: np.column_stack([np.sin(np.pi * x[:, 1]), 0 * x[:, 0]]))
solver = SaddleSolver(ops)
for alpha, beta in [(1.0, 0.0), (0.0, 1.0), (1.0, 0.125)]:
    u, p = solver.solve(alpha, beta, g)
    u_ref, p_ref = dense_saddle_solve(ops, alpha, beta, g)
    print(f"alpha={alpha}, beta={beta}: |Bu| = {np.abs(ops.B @ u).max():.1e}, "
          f"mean(p) = {ops.mean_vec @ p:.1e}, diff to dense = {np.abs(u - u_ref).max():.1e}")
print("cached factorizations:", len(solver._cache))
