import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from fcpm.subsolvers import (
    AmgCoarseningWarning,
    AmgOptions,
    SingularMatrixError,
    ZeroPivotError,
    amg_setup,
    amg_vcycle,
    direct_factorize,
    direct_solve,
    ilu0_apply,
    ilu0_factorize,
)


def poisson1d(n):
    return sps.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def poisson2d(n):
    T = poisson1d(n)
    I = sps.identity(n)
    return sps.csr_matrix(sps.kron(I, T) + sps.kron(T, I))


def exact_ilu_residual(A):
    """Run the ILU(0) kernel in rational arithmetic; return max |(LU - A)_ij| on the pattern
    together with the rational factors as a dense object array."""
    from fractions import Fraction

    from fcpm.subsolvers.ilu import _ilu0_inplace

    A = sps.csr_matrix(A)
    A.sort_indices()
    n = A.shape[0]
    data = np.array([Fraction(float(v)) for v in A.data], dtype=object)
    _ilu0_inplace(A.indptr, A.indices, data, n)
    LU = np.zeros((n, n), dtype=object)
    LU[:] = Fraction(0)
    for i in range(n):
        for t in range(A.indptr[i], A.indptr[i + 1]):
            LU[i, A.indices[t]] = data[t]
    L = np.tril(LU, -1) + np.eye(n, dtype=int)
    U = np.triu(LU)
    prod = L.dot(U)
    r, c = A.nonzero()
    worst = max(abs(prod[i, j] - Fraction(float(A[i, j]))) for i, j in zip(r, c))
    return worst, LU


def lu_on_pattern(F, A):
    A = sps.csr_matrix(A)
    LU = (F.L @ F.U).tocsr()
    r, c = A.nonzero()
    return np.asarray(LU[r, c]).ravel(), np.asarray(A[r, c]).ravel()


# -- direct ---------------------------------------------------------------------


def test_direct_identity(rng):
    b = rng.standard_normal(5)
    np.testing.assert_array_equal(direct_solve(direct_factorize(sps.identity(5)), b), b)


def test_direct_diagonal():
    F = direct_factorize(sps.diags([2.0, 4.0]))
    np.testing.assert_allclose(direct_solve(F, np.array([2.0, 4.0])), [1.0, 1.0], rtol=1e-15)


def test_direct_random_spd_matches_dense(rng):
    M = rng.standard_normal((20, 20))
    A = M @ M.T + 20 * np.eye(20)
    b = rng.standard_normal(20)
    x = direct_solve(direct_factorize(sps.csr_matrix(A)), b)
    np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-11, atol=1e-13)


def test_direct_singular_reports_row():
    A = sps.csr_matrix(np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 2.0]]))
    with pytest.raises(SingularMatrixError) as exc:
        direct_factorize(A)
    assert exc.value.row == 1


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 200), seed=st.integers(0, 2**31 - 1))
def test_direct_backward_error(n, seed):
    rng = np.random.default_rng(seed)
    A = sps.random(n, n, density=min(1.0, 5.0 / n), random_state=rng, format="csr")
    A = sps.csr_matrix(A + sps.diags(rng.uniform(1.0, 2.0, n)))
    b = rng.standard_normal(n)
    x = direct_solve(direct_factorize(A), b)
    normA = sps.linalg.norm(A, np.inf)
    err = np.linalg.norm(A @ x - b, np.inf) / (normA * np.linalg.norm(x, np.inf)
                                                + np.linalg.norm(b, np.inf))
    assert err <= 1e-12


# -- ILU(0) ---------------------------------------------------------------------


@pytest.mark.parametrize("tri", [np.tril, np.triu])
def test_ilu_triangular_is_exact(rng, tri):
    A = sps.csr_matrix(tri(rng.standard_normal((8, 8))) + 4 * np.eye(8))
    b = rng.standard_normal(8)
    F = ilu0_factorize(A)
    np.testing.assert_allclose(ilu0_apply(F, b), direct_solve(direct_factorize(A), b),
                               rtol=1e-12)
    got, ref = lu_on_pattern(F, A)
    if tri is np.triu:
        np.testing.assert_array_equal(got, ref)
    else:  # l_ij = a_ij / u_jj rounds once
        np.testing.assert_allclose(got, ref, rtol=2 * np.finfo(float).eps)


def test_ilu_diagonal():
    A = sps.diags([2.0, 5.0, -1.0], format="csr")
    F = ilu0_factorize(A)
    np.testing.assert_array_equal(F.L.toarray(), np.eye(3))
    np.testing.assert_array_equal(F.U.toarray(), A.toarray())
    np.testing.assert_array_equal(ilu0_apply(F, np.array([2.0, 5.0, -1.0])), np.ones(3))


def test_ilu_poisson1d_pattern_bitwise():
    A = poisson1d(10)
    got, ref = lu_on_pattern(ilu0_factorize(A), A)
    np.testing.assert_array_equal(got, ref)


@pytest.mark.parametrize("kind", ["poisson2d", "random"])
def test_ilu_pattern_identity_exact_in_rationals(kind, rng):
    if kind == "poisson2d":
        A = poisson2d(5)
    else:
        A = sps.csr_matrix(sps.random(25, 25, density=0.2, random_state=rng) + 4 * sps.identity(25))
    worst, LU = exact_ilu_residual(A)
    assert worst == 0
    # the float factors are the rational ones up to rounding
    F = ilu0_factorize(A)
    got = (sps.tril(F.L, -1) + F.U).toarray()
    ref = LU.astype(float)
    assert np.all(np.abs(got - ref) <= 8 * np.finfo(float).eps * np.abs(ref))


def test_ilu_factors_keep_pattern():
    A = poisson2d(6)
    F = ilu0_factorize(A)
    pat = set(zip(*A.nonzero()))
    assert set(zip(*F.L.nonzero())) <= pat
    assert set(zip(*F.U.nonzero())) <= pat


def test_ilu_zero_diagonal_reports_row():
    A = sps.csr_matrix(np.array([[1.0, 1.0, 0], [1.0, 0.0, 0], [0, 0, 1.0]]))
    with pytest.raises(ZeroPivotError) as exc:
        ilu0_factorize(sps.csr_matrix(np.array([[2.0, 0], [1.0, 0.0]])))
    assert exc.value.row == 1
    with pytest.raises(ZeroPivotError) as exc:
        ilu0_factorize(A)  # pivot of row 1 vanishes during elimination
    assert exc.value.row == 1


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 2**31 - 1))
def test_ilu_pattern_identity_random(n, seed):
    # recomputing L U rounds differently from the in-place update, so compare
    # to a few units in the last place of the largest contributing term
    rng = np.random.default_rng(seed)
    A = sps.random(n, n, density=0.3, random_state=rng, format="csr")
    A = sps.csr_matrix(A + sps.diags(np.full(n, 4.0)))
    F = ilu0_factorize(A)
    got, ref = lu_on_pattern(F, A)
    scale = (abs(F.L) @ abs(F.U)).tocsr()[A.nonzero()].A.ravel()
    assert np.all(np.abs(got - ref) <= 4 * np.finfo(float).eps * scale)


# -- AMG ------------------------------------------------------------------------


def test_amg_one_by_one():
    H = amg_setup(sps.csr_matrix([[3.0]]))
    assert H.n_levels == 1
    np.testing.assert_allclose(amg_vcycle(H, np.array([6.0])), [2.0])


def test_amg_poisson_levels_decrease():
    H = amg_setup(poisson2d(32))
    assert H.n_levels >= 2
    assert all(a > b for a, b in zip(H.sizes, H.sizes[1:]))


def test_amg_galerkin_property():
    H = amg_setup(poisson2d(16), coarsest_size=10)
    for fine, coarse in zip(H.levels, H.levels[1:]):
        ref = (fine.R @ fine.A @ fine.P).toarray()
        np.testing.assert_allclose(coarse.A.toarray(), ref, atol=1e-12)


def test_amg_disconnected_diagonal():
    A = sps.diags(np.arange(1.0, 101.0), format="csr")
    H = amg_setup(A)
    assert H.n_levels == 1
    b = np.arange(1.0, 101.0)
    np.testing.assert_allclose(amg_vcycle(H, b), np.ones(100))


def test_amg_stagnation_falls_back_to_direct(monkeypatch):
    import fcpm.subsolvers.amg as amg

    monkeypatch.setattr(amg, "rs_splitting", lambda S, second_pass=True: np.ones(S.shape[0], bool))
    A = poisson2d(8)
    with pytest.warns(AmgCoarseningWarning, match="stagnated"):
        H = amg.amg_setup(A)
    assert H.n_levels == 1 and H.warnings
    b = np.ones(64)
    np.testing.assert_allclose(A @ amg_vcycle(H, b), b, atol=1e-10)


def test_amg_zero_rhs():
    H = amg_setup(poisson2d(8))
    np.testing.assert_array_equal(amg_vcycle(H, np.zeros(64), np.zeros(64)), np.zeros(64))


def test_amg_single_level_is_direct(rng):
    A = poisson2d(5)
    H = amg_setup(A, max_levels=1)
    b = rng.standard_normal(25)
    np.testing.assert_allclose(amg_vcycle(H, b), np.linalg.solve(A.toarray(), b), rtol=1e-12)


def test_amg_poisson_ten_cycles(rng):
    A = poisson2d(32)
    H = amg_setup(A)
    b = rng.standard_normal(A.shape[0])
    x = rng.standard_normal(A.shape[0])
    r0 = np.linalg.norm(b - A @ x)
    for _ in range(10):
        x = amg_vcycle(H, b, x)
    assert np.linalg.norm(b - A @ x) <= r0 * 1e-6


def test_amg_vcycle_linear(rng):
    A = poisson2d(16)
    H = amg_setup(A)
    b1, b2 = rng.standard_normal((2, A.shape[0]))
    lhs = amg_vcycle(H, b1 + b2)
    rhs = amg_vcycle(H, b1) + amg_vcycle(H, b2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(lhs).max())


def test_amg_elasticity_block_size(rng):
    from fcpm.subsolvers import MECHANICS_AMG
    from fcpm.toy_model import apply_scenario
    from fcpm.block_system import FORCE, MOMENTUM

    sc = apply_scenario("biot_column")
    m = sc.build(8, 16)
    x = m.initial_state()
    J = m.jacobian(x, m.classify(x))
    K = J.sub((FORCE, MOMENTUM), (FORCE, MOMENTUM))
    H = amg_setup(K, MECHANICS_AMG, component=m.mech_components)
    b = rng.standard_normal(K.shape[0])
    x = np.zeros_like(b)
    for _ in range(30):
        x = amg_vcycle(H, b, x)
    assert np.linalg.norm(b - K @ x) <= 1e-6 * np.linalg.norm(b)


def test_amg_options_validation():
    with pytest.raises(ValueError):
        AmgOptions(strength_threshold=1.5)
    with pytest.raises(ValueError):
        AmgOptions(strength="weird")
