"""CSR kernels and structural helpers shared by the block solvers.

Matrices are plain ``scipy.sparse.csr_matrix`` objects in canonical form
(sorted, duplicate-free column indices, float64 values). The helpers here add
the shape and structure checks the preconditioner relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps


class SingularBlockError(np.linalg.LinAlgError):
    """A D x D diagonal block could not be inverted."""

    def __init__(self, cell: int, message: str | None = None):
        self.cell = cell
        super().__init__(message or f"singular diagonal block at cell {cell}")


def as_csr(A) -> sps.csr_matrix:
    """Return ``A`` as a canonical float64 CSR matrix (copying if needed)."""
    if sps.issparse(A):
        M = sps.csr_matrix(A, dtype=np.float64)
    else:
        M = sps.csr_matrix(np.asarray(A, dtype=np.float64))
    if not M.has_canonical_format:
        M = M.copy()
        M.sum_duplicates()
        M.sort_indices()
    return M


def validate_csr(A: sps.csr_matrix) -> None:
    """Raise ``ValueError`` if ``A`` violates the CSR invariants."""
    n_rows, n_cols = A.shape
    indptr, indices = A.indptr, A.indices
    if indptr.shape[0] != n_rows + 1:
        raise ValueError("row_offsets must have length n_rows + 1")
    if np.any(np.diff(indptr) < 0):
        raise ValueError("row_offsets must be nondecreasing")
    if A.data.shape[0] != indices.shape[0]:
        raise ValueError("values and col_indices differ in length")
    if indices.size and (indices.min() < 0 or indices.max() >= n_cols):
        raise ValueError("column index out of range")
    # strictly increasing inside each row
    if indices.shape[0] > 1:
        same_row = np.ones(indices.shape[0] - 1, dtype=bool)
        starts = indptr[1:-1]
        starts = starts[(starts > 0) & (starts < indices.shape[0])]
        same_row[starts - 1] = False
        if np.any(np.diff(indices)[same_row] <= 0):
            raise ValueError("column indices must be strictly increasing within a row")


def spmv(A: sps.csr_matrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product ``A @ x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(
            f"dimension mismatch: matrix has {A.shape[1]} columns, vector has "
            f"shape {x.shape}"
        )
    return A @ x


def sparse_matmul(A: sps.csr_matrix, B: sps.csr_matrix) -> sps.csr_matrix:
    """Sparse product ``A @ B`` in canonical CSR form.

    Entries that cancel to exactly zero are dropped; nothing else is.
    """
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {B.shape}")
    C = sps.csr_matrix(as_csr(A) @ as_csr(B))
    C.eliminate_zeros()
    C.sort_indices()
    return C


def _check_index_set(idx, bound: int, what: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if idx.size == 0:
        return idx
    if idx.min() < 0 or idx.max() >= bound:
        raise IndexError(f"{what} index out of range [0, {bound})")
    if np.any(np.diff(idx) <= 0):
        raise ValueError(f"{what} index set must be sorted and unique")
    return idx


def extract_submatrix(A: sps.csr_matrix, rows, cols) -> sps.csr_matrix:
    """Return ``A[rows][:, cols]`` for sorted, unique index sets."""
    rows = _check_index_set(rows, A.shape[0], "row")
    cols = _check_index_set(cols, A.shape[1], "column")
    if rows.size == 0 or cols.size == 0:
        return sps.csr_matrix((rows.size, cols.size))
    sub = as_csr(A)[rows][:, cols]
    sub = sps.csr_matrix(sub)
    sub.sort_indices()
    return sub


@dataclass(frozen=True)
class BlockDiagInverse:
    """Inverses of the D x D diagonal blocks of a square matrix.

    ``inv_blocks[k]`` is the inverse of ``A[kD:(k+1)D, kD:(k+1)D]``.
    """

    block_size: int
    inv_blocks: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.inv_blocks.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        n = self.n_blocks * self.block_size
        return (n, n)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        n = self.shape[0]
        if x.shape[0] != n:
            raise ValueError(f"dimension mismatch: expected {n} rows, got {x.shape[0]}")
        if x.ndim == 1:
            xb = x.reshape(self.n_blocks, self.block_size)
            return np.einsum("kij,kj->ki", self.inv_blocks, xb).ravel()
        xb = x.reshape(self.n_blocks, self.block_size, -1)
        return np.einsum("kij,kjm->kim", self.inv_blocks, xb).reshape(n, -1)

    def to_csr(self) -> sps.csr_matrix:
        if self.n_blocks == 0:
            return sps.csr_matrix((0, 0))
        return sps.block_diag(list(self.inv_blocks), format="csr")


def diagonal_blocks(A: sps.spmatrix, block_size: int) -> np.ndarray:
    """Dense copies of the D x D diagonal blocks of ``A``, shape (n/D, D, D)."""
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if n % block_size:
        raise ValueError(f"size {n} is not divisible by block size {block_size}")
    coo = sps.coo_matrix(A)
    nb = n // block_size
    blocks = np.zeros((nb, block_size, block_size))
    keep = coo.row // block_size == coo.col // block_size
    r, c, v = coo.row[keep], coo.col[keep], coo.data[keep]
    np.add.at(blocks, (r // block_size, r % block_size, c % block_size), v)
    return blocks


def block_diag_inverse(A: sps.spmatrix, block_size: int) -> BlockDiagInverse:
    """Invert the D x D diagonal blocks of ``A``; off-block entries are ignored.

    Raises:
        SingularBlockError: if a block has ``|det| < 1e-14 * ||block||_F^D``.
    """
    blocks = diagonal_blocks(A, block_size)
    if blocks.shape[0] == 0:
        return BlockDiagInverse(block_size, blocks)
    norms = np.linalg.norm(blocks, axis=(1, 2))
    dets = np.abs(np.linalg.det(blocks))
    bad = np.flatnonzero(~(dets >= 1e-14 * norms**block_size) | (norms == 0))
    if bad.size:
        raise SingularBlockError(int(bad[0]))
    return BlockDiagInverse(block_size, np.linalg.inv(blocks))
