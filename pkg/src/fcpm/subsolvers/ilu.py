"""Zero-fill incomplete LU factorization on the CSR pattern."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve_triangular

from fcpm.sparse_core import as_csr


class ZeroPivotError(np.linalg.LinAlgError):
    """ILU(0) met a zero diagonal entry."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"zero pivot in ILU(0) at row {row}")


def _ilu0_inplace(indptr, indices, data, n):
    """IKJ elimination restricted to the existing pattern.

    ``data`` is overwritten with the strict lower part of L (unit diagonal
    implied) and the upper part of U.
    """
    diag_pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        hit = np.flatnonzero(indices[lo:hi] == i)
        if hit.size == 0 or data[lo + hit[0]] == 0.0:
            raise ZeroPivotError(i)
        diag_pos[i] = lo + hit[0]

    for i in range(1, n):
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        where = {int(c): lo + t for t, c in enumerate(cols)}
        for t in range(hi - lo):
            k = int(cols[t])
            if k >= i:
                break
            pos_ik = lo + t
            data[pos_ik] /= data[diag_pos[k]]
            lik = data[pos_ik]
            for q in range(diag_pos[k] + 1, indptr[k + 1]):
                p = where.get(int(indices[q]))
                if p is not None:
                    data[p] -= lik * data[q]
        if data[diag_pos[i]] == 0.0:
            raise ZeroPivotError(i)
    return diag_pos


class Ilu0Factor:
    """ILU(0) factors ``L`` (unit lower) and ``U`` sharing the pattern of ``A``.

    Raises:
        ZeroPivotError: if a diagonal entry is missing, zero, or becomes zero.
    """

    def __init__(self, A):
        A = as_csr(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        n = A.shape[0]
        self.n = n
        data = A.data.copy()
        _ilu0_inplace(A.indptr, A.indices, data, n)
        LU = sps.csr_matrix((data, A.indices.copy(), A.indptr.copy()), shape=A.shape)
        self.L = sps.csr_matrix(sps.tril(LU, k=-1) + sps.identity(n, format="csr"))
        self.U = sps.csr_matrix(sps.triu(LU))
        self.L.sort_indices()
        self.U.sort_indices()
        self._diagonal = self.U.diagonal()
        self._is_diagonal = self.L.nnz == n and self.U.nnz == n

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Apply ``U^{-1} L^{-1} b`` by forward then backward substitution."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: expected {self.n}, got {b.shape[0]}")
        if self.n == 0:
            return b.copy()
        if self._is_diagonal:
            return b / self._diagonal if b.ndim == 1 else b / self._diagonal[:, None]
        y = spsolve_triangular(self.L, b, lower=True, unit_diagonal=True)
        return spsolve_triangular(self.U, y, lower=False)

    __call__ = solve


def ilu0_factorize(A) -> Ilu0Factor:
    return Ilu0Factor(A)


def ilu0_apply(F: Ilu0Factor, b: np.ndarray) -> np.ndarray:
    return F.solve(b)
