"""Space-time convergence study on the manufactured solution.

Mesh width and step size are halved together, so second-order quantities
should shrink by a factor of four per level.  Both scheme setups are shown.
"""

from stokes_cgp.analysis import COLLOCATION, INTERPOLATION, run_convergence_study

LEVELS = range(4)
ROWS = [
    (INTERPOLATION, "L2", "p_L2"),
    (COLLOCATION, "L2", "p_L2"),
    (INTERPOLATION, "L2", "u_H1"),
    (INTERPOLATION, "lbar2", "dtu_L2"),
    (INTERPOLATION, "l2plus", "dtu_L2"),
    (COLLOCATION, "L2", "dtu_L2"),
]

for setup in ("tables", "formulated"):
    reports = run_convergence_study(LEVELS, setup=setup)
    print(f"\nsetup '{setup}', error at level {LEVELS[-1]} and last EOC")
    for variant, fam, q in ROWS:
        rep = reports[variant]
        print(f"  {variant:13s} {fam:6s} {q:6s}  {rep.error(fam, q):.4e}  EOC {rep.eoc(fam, q):.2f}")
