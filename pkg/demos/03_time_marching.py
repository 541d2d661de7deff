"""March the manufactured problem in time and watch the velocity error.

Each step solves one saddle-point system for the midpoint velocity and
pressure; the node velocity follows by linear extrapolation.
"""

import numpy as np

from stokes_cgp.analysis import ErrorEvaluator, ManufacturedSolution
from stokes_cgp.assembly import assemble_operators
from stokes_cgp.fem import VELOCITY, TaylorHoodSpace
from stokes_cgp.linsolve import SaddleSolver
from stokes_cgp.mesh import build_unit_square
from stokes_cgp.timestepping import TimeMesh, march

ms = ManufacturedSolution()
space = TaylorHoodSpace(build_unit_square(8))
ops = assemble_operators(space)
solver = SaddleSolver(ops)
tm = TimeMesh.uniform(2.0, 8)
ev = ErrorEvaluator(space)

for rule in ("trapezoidal", "gauss"):
    traj = march(np.zeros(space.n_u), tm, ms.forcing, ops, solver, load_rule=rule)
    print(f"\nload rule: {rule}")
    print("   t     |u - u_h|_H1    max|B ubar|")
    for n in range(1, tm.N + 1, 2):
        t = tm.nodes[n]
        err = ev.h1semi(VELOCITY, traj.u_nodes[n], lambda x: ms.grad_u(x, t))
        print(f"  {t:4.2f}   {err:.4e}     {np.abs(ops.B @ traj.u_mid[n - 1]).max():.1e}")
