"""Why the right transform is needed: sticking contact blocks are singular.

Solves two time steps of the fractured toy model, then prints the smallest
singular value of every contact block before and after ``J -> J Q_r``.

Run with ``python demos/stick_regularization.py``.
"""

import numpy as np

from fcpm.block_system import CONTACT
from fcpm.linear_solvers import make_solver
from fcpm.precond import apply_transform, build_transform
from fcpm.toy_model import apply_scenario, simulate

sc = apply_scenario("single_frac_gmres")
model = sc.build(16, 16)
x = simulate(model, 2, make_solver("direct")).final_state
model.begin_step(x)
cells = model.classify(x)
J = model.jacobian(x, cells)
Jt = apply_transform(J, build_transform(J))

J11, Jt11 = J[CONTACT, CONTACT].toarray(), Jt[CONTACT, CONTACT].toarray()
print(f"{'point':>5} {'state':>6} {'smin(J11)':>11} {'smin(J~11)':>11} {'cond(J~11)':>11}")
for k, cell in enumerate(cells):
    blk = np.s_[2 * k:2 * k + 2, 2 * k:2 * k + 2]
    s0 = np.linalg.svd(J11[blk], compute_uv=False)
    s1 = np.linalg.svd(Jt11[blk], compute_uv=False)
    print(f"{k:>5} {cell.state.value:>6} {s0[-1]:>11.2e} {s1[-1]:>11.2e} {s1[0] / s1[-1]:>11.2e}")
