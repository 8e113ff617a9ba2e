"""Sparse LU wrapper with singularity reporting."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from fcpm.sparse_core import as_csr

# Dense fallback used only to locate the offending row of a singular matrix.
_DENSE_DIAGNOSIS_LIMIT = 4000


class SingularMatrixError(np.linalg.LinAlgError):
    """Factorization hit a zero pivot."""

    def __init__(self, row: int | None, message: str | None = None):
        self.row = row
        if message is None:
            where = "unknown row" if row is None else f"row {row}"
            message = f"matrix is singular: zero pivot at {where}"
        super().__init__(message)


def _locate_zero_pivot(A: sps.csr_matrix) -> int | None:
    n = A.shape[0]
    if n == 0:
        return None
    if A.getnnz(axis=1).min() == 0:
        return int(np.flatnonzero(A.getnnz(axis=1) == 0)[0])
    if n > _DENSE_DIAGNOSIS_LIMIT:
        return None
    _, _, U = scipy.linalg.lu(A.toarray())
    d = np.abs(np.diag(U))
    scale = max(np.abs(U).max(), 1.0e-300)
    small = np.flatnonzero(d <= 1e-14 * scale * n)
    return int(small[0]) if small.size else None


class DirectFactor:
    """LU factorization of a square sparse matrix (SuperLU).

    Args:
        A: square matrix.

    Raises:
        SingularMatrixError: if a zero pivot is encountered.
    """

    def __init__(self, A):
        A = as_csr(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.shape = A.shape
        self.n = A.shape[0]
        self._lu = None
        if self.n == 0:
            return
        try:
            self._lu = spla.splu(sps.csc_matrix(A))
        except RuntimeError as exc:
            if "singular" not in str(exc).lower():
                raise
            raise SingularMatrixError(_locate_zero_pivot(A)) from None
        d = np.abs(self._lu.U.diagonal())
        if not np.all(np.isfinite(d)) or np.any(d == 0):
            raise SingularMatrixError(_locate_zero_pivot(A))

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: expected {self.n}, got {b.shape[0]}")
        if self.n == 0:
            return b.copy()
        return self._lu.solve(b)

    __call__ = solve


def direct_factorize(A) -> DirectFactor:
    return DirectFactor(A)


def direct_solve(F: DirectFactor, b: np.ndarray) -> np.ndarray:
    return F.solve(b)
