"""Classical Ruge-Stueben algebraic multigrid.

Coarsening is the two-pass Ruge-Stueben splitting with a deterministic
tie-break (largest measure first, then lowest index). Interpolation is
direct, with separate scaling of negative and positive couplings. Smoothing
is symmetric Gauss-Seidel.

For vector problems (``block_size > 1``) the unknown-based approach is used:
unknown ``i`` carries the component ``i % block_size`` on the finest level,
and strength, interpolation and coarsening only ever couple unknowns of the
same component. Coarse unknowns inherit the component of their fine parent.
"""

from __future__ import annotations

import heapq
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve_triangular

from fcpm.sparse_core import as_csr
from fcpm.subsolvers.direct import DirectFactor

logger = logging.getLogger(__name__)


class AmgCoarseningWarning(UserWarning):
    """Coarsening stopped early and the level is solved directly."""


@dataclass
class AmgOptions:
    """Setup parameters.

    Attributes:
        strength_threshold: theta in the classical strength test.
        strength: ``"signed"`` (negative couplings only, for M-matrices) or
            ``"absolute"`` (magnitudes, for elasticity-like operators).
        block_size: number of interleaved unknowns per node.
        truncation: interpolation weights below ``truncation * max |w|`` in
            their row are dropped and the row is rescaled. 0 disables it.
        max_levels: maximum number of levels including the coarsest.
        coarsest_size: levels at or below this size are solved directly.
        second_pass: run the second Ruge-Stueben pass that repairs F-F
            strong connections without a common C point.
        presweeps, postsweeps: symmetric Gauss-Seidel sweeps per V-cycle.
    """

    strength_threshold: float = 0.25
    strength: str = "signed"
    block_size: int = 1
    truncation: float = 0.0
    max_levels: int = 25
    coarsest_size: int = 40
    second_pass: bool = True
    presweeps: int = 1
    postsweeps: int = 1

    def __post_init__(self):
        if not 0.0 <= self.strength_threshold <= 1.0:
            raise ValueError("strength_threshold must lie in [0, 1]")
        if self.strength not in ("signed", "absolute"):
            raise ValueError(f"unknown strength measure {self.strength!r}")
        if self.block_size < 1 or self.max_levels < 1:
            raise ValueError("block_size and max_levels must be positive")
        if not 0.0 <= self.truncation < 1.0:
            raise ValueError("truncation must lie in [0, 1)")


# Defaults carried for the two subproblems the block preconditioner hands over.
MECHANICS_AMG = AmgOptions(strength_threshold=0.7, strength="absolute", block_size=2)
FLUID_AMG = AmgOptions(strength_threshold=0.25, strength="signed", truncation=0.3)


@dataclass
class AmgLevel:
    A: sps.csr_matrix
    P: sps.csr_matrix | None = None
    R: sps.csr_matrix | None = None
    lower: sps.csr_matrix | None = None  # D + L
    upper: sps.csr_matrix | None = None  # D + U
    component: np.ndarray | None = None


@dataclass
class AmgHierarchy:
    levels: list
    coarse_solver: DirectFactor
    options: AmgOptions
    warnings: list = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def sizes(self) -> list[int]:
        return [lvl.A.shape[0] for lvl in self.levels]

    def operator_complexity(self) -> float:
        return sum(lvl.A.nnz for lvl in self.levels) / max(self.levels[0].A.nnz, 1)

    def solve(self, b: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        return amg_vcycle(self, b, x0)

    __call__ = solve


def strength_graph(A: sps.csr_matrix, theta: float, measure: str,
                   component: np.ndarray | None = None) -> sps.csr_matrix:
    """Boolean CSR matrix S with S[i, j] = 1 iff i strongly depends on j."""
    n = A.shape[0]
    coo = A.tocoo()
    r, c, v = coo.row, coo.col, coo.data
    keep = r != c
    if component is not None:
        keep &= component[r] == component[c]
    r, c, v = r[keep], c[keep], v[keep]
    s = -v if measure == "signed" else np.abs(v)
    row_max = np.zeros(n)
    np.maximum.at(row_max, r, s)
    strong = (s > 0) & (s >= theta * row_max[r])
    S = sps.csr_matrix(
        (np.ones(int(strong.sum())), (r[strong], c[strong])), shape=(n, n)
    )
    S.sort_indices()
    return S


def rs_splitting(S: sps.csr_matrix, second_pass: bool = True) -> np.ndarray:
    """Ruge-Stueben C/F splitting. Returns a boolean array, True for C points."""
    n = S.shape[0]
    ST = sps.csr_matrix(S.T)
    ST.sort_indices()
    UNDECIDED, CPT, FPT = 0, 1, 2
    state = np.zeros(n, dtype=np.int8)
    lam = np.diff(ST.indptr).astype(np.int64)
    # points that neither influence nor depend on anything carry no coarse info
    isolated = (lam == 0) & (np.diff(S.indptr) == 0)
    state[isolated] = FPT
    heap = [(-int(lam[i]), i) for i in range(n) if state[i] == UNDECIDED]
    heapq.heapify(heap)
    S_ptr, S_idx = S.indptr, S.indices
    T_ptr, T_idx = ST.indptr, ST.indices
    while heap:
        neg, i = heapq.heappop(heap)
        if state[i] != UNDECIDED or -neg != lam[i]:
            continue
        state[i] = CPT
        for j in T_idx[T_ptr[i]:T_ptr[i + 1]]:
            if state[j] != UNDECIDED:
                continue
            state[j] = FPT
            for k in S_idx[S_ptr[j]:S_ptr[j + 1]]:
                if state[k] == UNDECIDED:
                    lam[k] += 1
                    heapq.heappush(heap, (-int(lam[k]), int(k)))
        for k in S_idx[S_ptr[i]:S_ptr[i + 1]]:
            if state[k] == UNDECIDED:
                lam[k] -= 1
                heapq.heappush(heap, (-int(lam[k]), int(k)))
    is_c = state == CPT

    if second_pass:
        for i in range(n):
            if is_c[i]:
                continue
            Si = S_idx[S_ptr[i]:S_ptr[i + 1]]
            Ci = set(int(k) for k in Si if is_c[k])
            for j in Si:
                if is_c[j]:
                    continue
                Sj = S_idx[S_ptr[j]:S_ptr[j + 1]]
                if not any(int(k) in Ci for k in Sj):
                    is_c[j] = True
                    Ci.add(int(j))
    return is_c


def direct_interpolation(A: sps.csr_matrix, S: sps.csr_matrix, is_c: np.ndarray,
                         component: np.ndarray | None = None,
                         truncation: float = 0.0) -> sps.csr_matrix:
    """Direct interpolation operator P (n x n_c)."""
    n = A.shape[0]
    coarse_index = np.cumsum(is_c) - 1
    n_c = int(is_c.sum())
    rows, cols, vals = [], [], []
    Ap, Ai, Ax = A.indptr, A.indices, A.data
    Sp, Si = S.indptr, S.indices
    for i in range(n):
        if is_c[i]:
            rows.append(i)
            cols.append(int(coarse_index[i]))
            vals.append(1.0)
            continue
        lo, hi = Ap[i], Ap[i + 1]
        js, a = Ai[lo:hi], Ax[lo:hi]
        off = js != i
        if component is not None:
            off &= component[js] == component[i]
        diag = a[js == i].sum()
        jo, ao = js[off], a[off]
        strong_c = set(int(k) for k in Si[Sp[i]:Sp[i + 1]] if is_c[k])
        in_ci = np.array([int(k) in strong_c for k in jo], dtype=bool)
        if not in_ci.any() or diag == 0.0:
            continue
        neg, pos = np.minimum(ao, 0.0), np.maximum(ao, 0.0)
        sum_neg, sum_pos = neg.sum(), pos.sum()
        ci_neg, ci_pos = neg[in_ci].sum(), pos[in_ci].sum()
        if ci_pos == 0.0:
            diag = diag + sum_pos
            beta = 0.0
        else:
            beta = sum_pos / ci_pos
        alpha = sum_neg / ci_neg if ci_neg != 0.0 else 0.0
        w = -(alpha * neg[in_ci] + beta * pos[in_ci]) / diag
        jc = jo[in_ci]
        if truncation > 0.0 and w.size > 1:
            big = np.abs(w) >= truncation * np.abs(w).max()
            total = w.sum()
            kept = w[big].sum()
            if kept != 0.0:
                w = w[big] * (total / kept)
                jc = jc[big]
        rows.extend([i] * len(jc))
        cols.extend(coarse_index[jc].tolist())
        vals.extend(w.tolist())
    P = sps.csr_matrix((vals, (rows, cols)), shape=(n, n_c))
    P.sum_duplicates()
    P.sort_indices()
    return P


def _smoother_parts(A: sps.csr_matrix):
    lower = sps.csr_matrix(sps.tril(A, format="csr"))
    upper = sps.csr_matrix(sps.triu(A, format="csr"))
    lower.sort_indices()
    upper.sort_indices()
    return lower, upper


def amg_setup(A, opts: AmgOptions | None = None, component=None,
              **overrides) -> AmgHierarchy:
    """Build a Ruge-Stueben hierarchy for ``A``.

    Keyword overrides are applied on top of ``opts`` (or the defaults).
    ``component`` assigns each unknown to a displacement component and
    overrides the alternating pattern implied by ``block_size``; use it when
    constrained unknowns break the interleaving.

    Coarsening stops at ``coarsest_size``, at ``max_levels``, when no strong
    connection remains, or when a level fails to shrink; the last level is
    factorized directly. Stagnation is reported through
    :class:`AmgCoarseningWarning` and recorded on the hierarchy.
    """
    if opts is None:
        opts = AmgOptions(**overrides)
    elif overrides:
        opts = AmgOptions(**{**opts.__dict__, **overrides})
    A = as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    n = A.shape[0]
    if component is None and opts.block_size > 1 and n % opts.block_size:
        raise ValueError(f"size {n} is not a multiple of block size {opts.block_size}")
    if component is not None:
        component = np.asarray(component, dtype=np.int64)
        if component.shape != (n,):
            raise ValueError("component array must have one entry per unknown")
    elif opts.block_size > 1:
        component = np.arange(n) % opts.block_size
    levels = [AmgLevel(A=A, component=component)]
    notes = []
    while True:
        lvl = levels[-1]
        n_l = lvl.A.shape[0]
        if n_l <= opts.coarsest_size or len(levels) >= opts.max_levels:
            break
        S = strength_graph(lvl.A, opts.strength_threshold, opts.strength, lvl.component)
        if S.nnz == 0:
            break
        is_c = rs_splitting(S, opts.second_pass)
        n_c = int(is_c.sum())
        if n_c == 0 or n_c >= n_l:
            msg = f"coarsening stagnated on level {len(levels) - 1} (size {n_l} -> {n_c}); using a direct solve there"
            notes.append(msg)
            warnings.warn(msg, AmgCoarseningWarning, stacklevel=2)
            break
        P = direct_interpolation(lvl.A, S, is_c, lvl.component, opts.truncation)
        R = sps.csr_matrix(P.T)
        R.sort_indices()
        Ac = sps.csr_matrix(R @ lvl.A @ P)
        Ac.sort_indices()
        lvl.P, lvl.R = P, R
        lvl.lower, lvl.upper = _smoother_parts(lvl.A)
        comp_c = lvl.component[is_c] if lvl.component is not None else None
        levels.append(AmgLevel(A=Ac, component=comp_c))
    coarse = DirectFactor(levels[-1].A)
    logger.debug("AMG hierarchy sizes %s", [lv.A.shape[0] for lv in levels])
    return AmgHierarchy(levels=levels, coarse_solver=coarse, options=opts, warnings=notes)


def _sgs(lvl: AmgLevel, b: np.ndarray, x: np.ndarray, sweeps: int) -> np.ndarray:
    A = lvl.A
    for _ in range(sweeps):
        x = x + spsolve_triangular(lvl.lower, b - A @ x, lower=True)
        x = x + spsolve_triangular(lvl.upper, b - A @ x, lower=False)
    return x


def _cycle(H: AmgHierarchy, k: int, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    if k == H.n_levels - 1:
        return H.coarse_solver.solve(b)
    lvl = H.levels[k]
    x = _sgs(lvl, b, x, H.options.presweeps)
    rc = lvl.R @ (b - lvl.A @ x)
    ec = _cycle(H, k + 1, rc, np.zeros(rc.shape[0]))
    x = x + lvl.P @ ec
    return _sgs(lvl, b, x, H.options.postsweeps)


def amg_vcycle(H: AmgHierarchy, b: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
    """One V-cycle for ``A x = b`` starting from ``x0`` (zero by default)."""
    b = np.asarray(b, dtype=np.float64)
    n = H.levels[0].A.shape[0]
    if b.shape != (n,):
        raise ValueError(f"dimension mismatch: expected ({n},), got {b.shape}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"dimension mismatch: x0 has shape {x.shape}")
    return _cycle(H, 0, b, x)
