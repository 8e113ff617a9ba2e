"""Compare the linear solver variants on one fractured toy problem.

For each variant the script runs the full time loop and prints average
linear iterations per Newton step, average Newton steps per time step and
the final contact states. A second block repeats the exact-subsolver run
with a higher matrix permeability, where the matrix fixed-stress
approximation is closer to the true mass Schur complement.

Run with ``python demos/preconditioner_variants.py [N]`` (default N = 16).
"""

import logging
import sys
import time

from fcpm.linear_solvers import make_solver
from fcpm.toy_model import apply_scenario, simulate

logging.disable(logging.WARNING)
n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
sc = apply_scenario("single_frac_gmres")


def run(variant, material=None):
    model = sc.build(n, n, material)
    t0 = time.perf_counter()
    res = simulate(model, sc.n_steps, make_solver(variant))
    print(f"{variant:>16} {res.avg_linear_iterations():>8.2f} {res.avg_newton_iterations():>8.2f} "
          f"{time.perf_counter() - t0:>7.1f}s  {res.reports[-1].state_counts[-1]}")


print(f"{n}x{n} grid, {sc.n_steps} steps")
print(f"{'variant':>16} {'linear':>8} {'newton':>8} {'time':>8}  final states")
for v in ("gmres_direct", "gmres_amg", "richardson_phat"):
    run(v)

print("\nhigher matrix permeability (K_m = 1e-11 m^2)")
run("gmres_direct", sc.material.updated(K_m=1e-11))
