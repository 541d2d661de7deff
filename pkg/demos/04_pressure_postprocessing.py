"""Two ways to get a pressure defined at every time from the midpoint values.

Collocation solves an extra Stokes problem at each time node and builds a
C1 velocity and continuous pressure.  Interpolation just draws lines
through neighbouring midpoint pressures.  Both agree at the midpoints.
"""

import numpy as np

from stokes_cgp.analysis import COLLOCATION, INTERPOLATION, ErrorEvaluator, ManufacturedSolution, solve_level
from stokes_cgp.fem import PRESSURE
from stokes_cgp.postprocess import collocation_residuals, eval_p_interp, eval_p_tilde

ms = ManufacturedSolution()
sol = solve_level(1)
tm = sol.traj.time_mesh
ev = ErrorEvaluator(sol.space)
print(f"level 1: {sol.space.mesh.n}x{sol.space.mesh.n} mesh, {tm.N} steps")
print("max collocation residual at the nodes:",
      f"{collocation_residuals(sol.collocation, ms.forcing, sol.ops).max():.1e}")

print("\n   t     coll. p error   interp. p error")
for t in np.linspace(0.0, 2.0, 9):
    pe = lambda q: ev.l2(PRESSURE, q, lambda x: ms.p(x, t))
    print(f"  {t:4.2f}   {pe(eval_p_tilde(sol.collocation, t)):.4e}      {pe(eval_p_interp(sol.interpolation, t)):.4e}")

m = tm.midpoints[1]
same = np.abs(eval_p_tilde(sol.collocation, m) - eval_p_interp(sol.interpolation, m)).max()
print(f"\nat the midpoint t = {m}: the two pressures differ by {same:.1e}")
print(f"variants available: {COLLOCATION}, {INTERPOLATION}")
