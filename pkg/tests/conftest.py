import functools

import numpy as np
import pytest
import scipy.sparse as sps

from fcpm.block_system import BlockLayout, BlockMatrix5, FORBIDDEN_BLOCKS


def random_sparse(rng, n, m=None, density=0.3):
    m = n if m is None else m
    A = sps.random(n, m, density=density, random_state=rng, format="csr")
    A.data = rng.standard_normal(A.nnz)
    return A


def random_block_system(rng, sizes=(4, 4, 6, 4, 5), D=2, density=0.5):
    """Random system with the Jacobian block pattern and a solvable diagonal."""
    layout = BlockLayout(sizes, D)
    blocks = {}
    for i in range(5):
        for j in range(5):
            if (i, j) in FORBIDDEN_BLOCKS or sizes[i] == 0 or sizes[j] == 0:
                continue
            B = random_sparse(rng, sizes[i], sizes[j], density).toarray()
            if i == j:
                B += (sizes[i] + 3.0) * np.eye(sizes[i])
            blocks[(i, j)] = sps.csr_matrix(B)
    return BlockMatrix5(layout, blocks)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@functools.lru_cache(maxsize=None)
def toy_state(scenario="single_frac_gmres", n=8, steps=2):
    """``(model, x)`` after a few time steps solved with the direct reference solver."""
    from fcpm.linear_solvers import make_solver
    from fcpm.toy_model import apply_scenario, simulate

    sc = apply_scenario(scenario)
    ny = 4 * n if scenario == "biot_column" else n
    model = sc.build(n, ny)
    x0 = sc.initial_state(model)
    x = simulate(model, steps, make_solver("direct"), x0=x0).final_state if steps else x0
    model.begin_step(x)
    return model, x


def toy_jacobian(scenario="single_frac_gmres", n=8, steps=2):
    """``(model, x, cells, R, J, fixed_stress)`` at a converged toy state."""
    model, x = toy_state(scenario, n, steps)
    cells = model.classify(x)
    R, J = model.assemble(x, cells)
    return model, x, cells, R, J, model.fixed_stress(x)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)``; the lines are printed at session end."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(n: int, passed: bool, detail: str) -> bool:
        store[n] = (bool(passed), detail)
        print(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        passed, detail = store[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} {detail}")
