import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from fcpm.sparse_core import (
    SingularBlockError,
    block_diag_inverse,
    extract_submatrix,
    sparse_matmul,
    spmv,
    validate_csr,
)

from conftest import random_sparse


def test_spmv_identity():
    np.testing.assert_array_equal(spmv(sps.identity(3, format="csr"), np.array([1.0, 2, 3])),
                                  [1, 2, 3])


def test_spmv_zero_matrix():
    np.testing.assert_array_equal(spmv(sps.csr_matrix((3, 3)), np.array([4.0, -1, 2])),
                                  np.zeros(3))


def test_spmv_small_dense():
    A = sps.csr_matrix([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(spmv(A, np.ones(2)), [3.0, 7.0])


def test_spmv_dimension_mismatch():
    with pytest.raises(ValueError):
        spmv(sps.identity(3, format="csr"), np.ones(4))


def test_matmul_identity_both_sides(rng):
    A = random_sparse(rng, 7)
    I = sps.identity(7, format="csr")
    np.testing.assert_array_equal(sparse_matmul(A, I).toarray(), A.toarray())
    np.testing.assert_array_equal(sparse_matmul(I, A).toarray(), A.toarray())


def test_matmul_hand_example():
    A = sps.csr_matrix([[1.0, 2.0], [0.0, 1.0]])
    B = sps.csr_matrix([[1.0, 0.0], [3.0, 1.0]])
    np.testing.assert_array_equal(sparse_matmul(A, B).toarray(), [[7, 2], [3, 1]])


def test_matmul_drops_exact_cancellation():
    A = sps.csr_matrix([[1.0, 1.0]])
    B = sps.csr_matrix([[1.0], [-1.0]])
    C = sparse_matmul(A, B)
    assert C.nnz == 0
    validate_csr(C)


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError):
        sparse_matmul(sps.identity(2, format="csr"), sps.identity(3, format="csr"))


def test_extract_full_is_copy(rng):
    A = random_sparse(rng, 6)
    S = extract_submatrix(A, np.arange(6), np.arange(6))
    assert (S != A).nnz == 0


def test_extract_empty_rows():
    S = extract_submatrix(sps.identity(4, format="csr"), [], np.arange(4))
    assert S.shape == (0, 4)


def test_extract_diag_example():
    A = sps.diags([1.0, 2.0, 3.0], format="csr")
    np.testing.assert_array_equal(extract_submatrix(A, [1, 2], [1, 2]).toarray(),
                                  np.diag([2.0, 3.0]))


def test_extract_out_of_range():
    with pytest.raises((IndexError, ValueError)):
        extract_submatrix(sps.identity(3, format="csr"), [0, 3], [0])


def test_block_inverse_scaled_identity():
    B = block_diag_inverse(2.0 * sps.identity(4, format="csr"), 2)
    for blk in B.inv_blocks:
        np.testing.assert_allclose(blk, 0.5 * np.eye(2))


def test_block_inverse_formula():
    B = block_diag_inverse(sps.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), 2)
    np.testing.assert_allclose(B.inv_blocks[0], [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], rtol=1e-15)


def test_block_inverse_singular_names_cell():
    A = sps.block_diag([np.eye(2), [[1.0, 0.0], [0.0, 0.0]]], format="csr")
    with pytest.raises(SingularBlockError, match="singular diagonal block") as exc:
        block_diag_inverse(A, 2)
    assert exc.value.cell == 1


def test_block_inverse_ignores_off_diagonal_blocks(rng):
    A = random_sparse(rng, 6, density=0.8).toarray() + 5 * np.eye(6)
    B = block_diag_inverse(sps.csr_matrix(A), 3)
    for k in range(2):
        blk = A[3 * k:3 * k + 3, 3 * k:3 * k + 3]
        np.testing.assert_allclose(B.inv_blocks[k] @ blk, np.eye(3), atol=1e-12)


def test_block_inverse_rejects_bad_block_size():
    with pytest.raises(ValueError):
        block_diag_inverse(sps.identity(5, format="csr"), 2)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 50), m=st.integers(1, 50), seed=st.integers(0, 2**31 - 1))
def test_kernels_match_dense(n, m, seed):
    rng = np.random.default_rng(seed)
    A = random_sparse(rng, n, m)
    B = random_sparse(rng, m, n)
    x = rng.standard_normal(m)
    Ad, Bd = A.toarray(), B.toarray()
    y = spmv(A, x)
    np.testing.assert_allclose(y, Ad @ x, rtol=1e-13, atol=1e-13 * max(1.0, np.abs(Ad).sum()))
    C = sparse_matmul(A, B).toarray()
    scale = max(1.0, np.abs(Ad).max(initial=0) * np.abs(Bd).max(initial=0) * m)
    np.testing.assert_allclose(C, Ad @ Bd, rtol=1e-13, atol=1e-13 * scale)
    rows = np.sort(rng.choice(n, size=rng.integers(0, n + 1), replace=False))
    cols = np.sort(rng.choice(m, size=rng.integers(0, m + 1), replace=False))
    np.testing.assert_array_equal(extract_submatrix(A, rows, cols).toarray(),
                                  Ad[np.ix_(rows, cols)])


@settings(max_examples=30, deadline=None)
@given(nb=st.integers(1, 10), D=st.integers(1, 3), seed=st.integers(0, 2**31 - 1))
def test_block_inverse_apply_matches_dense(nb, D, seed):
    rng = np.random.default_rng(seed)
    blocks = [rng.standard_normal((D, D)) + 3 * np.eye(D) for _ in range(nb)]
    A = sps.block_diag(blocks, format="csr")
    x = rng.standard_normal(nb * D)
    y = block_diag_inverse(A, D).apply(x)
    ref = np.concatenate([np.linalg.solve(b, x[k * D:(k + 1) * D]) for k, b in enumerate(blocks)])
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-12)
