"""Drive the command line entry point from Python.

``stokes-cgp verify`` runs the built-in invariant checks, and
``--inject-fault`` shows that they catch a broken divergence operator.
``stokes-cgp convergence`` writes one CSV per variant and norm family.
"""

import tempfile
from pathlib import Path

from stokes_cgp.cli import main

print("$ stokes-cgp verify --seed 1")
print("exit code", main(["verify", "--seed", "1"]))

print("\n$ stokes-cgp verify --inject-fault flip-divergence")
print("exit code", main(["verify", "--inject-fault", "flip-divergence"]))

with tempfile.TemporaryDirectory() as out:
    print(f"\n$ stokes-cgp convergence --levels 0..2 --variant interpolation -o {out}")
    code = main(["convergence", "--levels", "0..2", "--variant", "interpolation", "-o", out])
    print("exit code", code)
    first = sorted(Path(out).iterdir())[0]
    print(f"\n{first.name}:")
    print(first.read_text())
