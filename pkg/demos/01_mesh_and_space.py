"""A first look at the discretisation: mesh, Taylor-Hood space, interpolation.

Run with ``python demos/01_mesh_and_space.py``.
"""

import numpy as np

from stokes_cgp.fem import PRESSURE, VELOCITY, TaylorHoodSpace, evaluate_points, interpolate_nodal
from stokes_cgp.mesh import build_unit_square

mesh = build_unit_square(4)
space = TaylorHoodSpace(mesh)
print(f"{mesh.n}x{mesh.n} cells of width {mesh.cell_width}, diameter h = {mesh.h:.4f}")
print(space)
print(f"boundary velocity DOFs pinned to zero: {space.boundary_velocity_dofs.size}")

# Q2 reproduces biquadratics exactly, Q1 reproduces bilinears exactly.  The
# velocity interpolant pins boundary values to zero, so use a bubble.
quad = lambda x: np.column_stack([x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1]), x[:, 0] * (1 - x[:, 0]) * x[:, 1] * (1 - x[:, 1])])
bilinear = lambda x: 1.0 + 2.0 * x[:, 0] - x[:, 0] * x[:, 1]
u = interpolate_nodal(space, VELOCITY, quad)
p = interpolate_nodal(space, PRESSURE, bilinear)

probe = np.random.default_rng(3).uniform(size=(5, 2))
print("\nvelocity error at random points:", np.abs(evaluate_points(space, VELOCITY, u, probe) - quad(probe)).max())
print("pressure error at random points:", np.abs(evaluate_points(space, PRESSURE, p, probe) - bilinear(probe)).max())
