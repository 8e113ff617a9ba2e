"""Friction and normal-stiffness sweep with the sequential fixed-stress operator.

Prints the table of average Richardson iterations per Newton step over
the (F, K_n) grid of the single-fracture scenario. Diverged points are
marked with ``--``.

Run with ``python demos/fixed_stress_sweep.py [N]`` (default N = 8).
"""

import logging
import sys

from fcpm.linear_solvers import make_solver
from fcpm.toy_model import apply_scenario, simulate

logging.disable(logging.WARNING)
n = int(sys.argv[1]) if len(sys.argv) > 1 else 8
sc = apply_scenario("single_frac_richardson")
F_vals, K_vals = sc.sweep["F"], sc.sweep["K_n"]

print(f"{n}x{n} grid; rows F, columns K_n (Pa/m)")
print(f"{'F':>6} " + " ".join(f"{k:>8.1e}" for k in K_vals))
for F in F_vals:
    cells = []
    for K in K_vals:
        model = sc.build(n, n, sc.material.updated(F=F, K_n=K))
        try:
            res = simulate(model, sc.n_steps, make_solver("richardson_phat"))
            cells.append(f"{res.avg_linear_iterations():>8.2f}")
        except RuntimeError:
            cells.append(f"{'--':>8}")
    print(f"{F:>6.3f} " + " ".join(cells))
