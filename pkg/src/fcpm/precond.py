"""Nested Schur-complement preconditioner for the five-group Jacobian.

Construction, given a Jacobian ``J`` in :class:`~fcpm.block_system.BlockMatrix5`
form:

1. ``X = -bdiag(J22)^{-1} J21`` defines ``Q_r = I + E_21(X)`` (identity with
   ``X`` in block (2, 1)); the transformed matrix is ``J~ = J Q_r``.
2. Contact unknowns are eliminated exactly with the D x D blocks of ``J~11``,
   giving ``S1_22`` and ``S1_32``.
3. Mechanics is decoupled from flow with a fixed-stress diagonal ``D55``.
4. Interface fluxes are eliminated with ``diag(J44)``, giving ``S3_55``.

Application runs the four block solves from the bottom up (mass, interface
flux, mechanics, contact), which inverts the block upper-triangular operator
built from these pieces.

:func:`build_Phat` provides the alternative operator that solves contact
plus mechanics monolithically and the flow pair with ``J55 + D55``; one
Richardson step with it is one sweep of the fixed-stress sequential scheme.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from fcpm.block_system import (
    CONTACT,
    FLUX,
    FORCE,
    MASS,
    MOMENTUM,
    BlockLayout,
    BlockMatrix5,
    assemble_monolithic,
    validate_pattern,
)
from fcpm.sparse_core import BlockDiagInverse, as_csr, block_diag_inverse, sparse_matmul
from fcpm.subsolvers import (
    FLUID_AMG,
    MECHANICS_AMG,
    AmgOptions,
    DirectFactor,
    Ilu0Factor,
    amg_setup,
)

logger = logging.getLogger(__name__)


class ZeroDiagonalError(np.linalg.LinAlgError):
    def __init__(self, row: int, what: str = "J44"):
        self.row = row
        super().__init__(f"zero diagonal entry in {what} at row {row}")


# -- transform -----------------------------------------------------------------


@dataclass(frozen=True)
class TransformQr:
    """Right transform ``Q_r``: the identity plus ``X`` in block (2, 1)."""

    X: sps.csr_matrix
    layout: BlockLayout
    D22_inv: BlockDiagInverse | None = None

    def to_csr(self) -> sps.csr_matrix:
        """Monolithic ``Q_r``."""
        M = BlockMatrix5(self.layout, {(FORCE, CONTACT): self.X})
        return sps.csr_matrix(assemble_monolithic(M) + sps.identity(self.layout.size))

    def inverse_csr(self) -> sps.csr_matrix:
        M = BlockMatrix5(self.layout, {(FORCE, CONTACT): -self.X})
        return sps.csr_matrix(assemble_monolithic(M) + sps.identity(self.layout.size))


def build_transform(J: BlockMatrix5, D: int | None = None) -> TransformQr:
    """Build ``Q_r`` from ``J22`` and ``J21``.

    Raises:
        SingularBlockError: if a D x D diagonal block of ``J22`` is singular.
    """
    D = D or J.layout.spatial_dim
    n1 = J.layout.group_sizes[CONTACT]
    n2 = J.layout.group_sizes[FORCE]
    if n2 == 0:
        return TransformQr(sps.csr_matrix((0, n1)), J.layout, None)
    D22_inv = block_diag_inverse(J[FORCE, FORCE], D)
    X = -sparse_matmul(D22_inv.to_csr(), J[FORCE, CONTACT])
    return TransformQr(X, J.layout, D22_inv)


def apply_transform(J: BlockMatrix5, Q: TransformQr) -> BlockMatrix5:
    """Return ``J Q_r``. Only the first block column changes."""
    Jt = J.copy()
    if Q.X.nnz == 0:
        return Jt
    for i in range(5):
        if J.present(i, FORCE):
            Jt[i, CONTACT] = J[i, CONTACT] + sparse_matmul(J[i, FORCE], Q.X)
    return Jt


def recover_solution(Q: TransformQr, x_tilde: np.ndarray) -> np.ndarray:
    """``x = Q_r x~``: only the interface displacement part changes."""
    x = np.array(x_tilde, dtype=np.float64)
    if x.shape[0] != Q.layout.size:
        raise ValueError(f"vector length {x.shape[0]} != system size {Q.layout.size}")
    if Q.X.nnz:
        s1, s2 = Q.layout.slice(CONTACT), Q.layout.slice(FORCE)
        x[s2] += Q.X @ x[s1]
    return x


def to_transformed(Q: TransformQr, x: np.ndarray) -> np.ndarray:
    """``x~ = Q_r^{-1} x``."""
    x = np.array(x, dtype=np.float64)
    if Q.X.nnz:
        s1, s2 = Q.layout.slice(CONTACT), Q.layout.slice(FORCE)
        x[s2] -= Q.X @ x[s1]
    return x


# -- first level ---------------------------------------------------------------


def build_S1(Jt: BlockMatrix5, D: int | None = None):
    """Eliminate contact unknowns from the transformed system.

    Returns:
        ``(S1_22, S1_32, J11t_inv)`` with ``S1_i2 = J_i2 - J~_i1 J~11^{-1} J12``.

    Raises:
        SingularBlockError: naming the contact cell whose block is singular.
    """
    D = D or Jt.layout.spatial_dim
    J11t_inv = block_diag_inverse(Jt[CONTACT, CONTACT], D)
    if Jt.layout.group_sizes[CONTACT] == 0:
        return Jt[FORCE, FORCE].copy(), Jt[MOMENTUM, FORCE].copy(), J11t_inv
    inv_J12 = sparse_matmul(J11t_inv.to_csr(), Jt[CONTACT, FORCE])
    S22 = as_csr(Jt[FORCE, FORCE] - sparse_matmul(Jt[FORCE, CONTACT], inv_J12))
    S32 = as_csr(Jt[MOMENTUM, FORCE] - sparse_matmul(Jt[MOMENTUM, CONTACT], inv_J12))
    return S22, S32, J11t_inv


# -- fixed stress ----------------------------------------------------------------


@dataclass(frozen=True)
class FixedStressParams:
    """Material data entering the fixed-stress coefficients (consistent units)."""

    G: float
    lam: float
    alpha: float
    c_f: float
    phi0: float
    dim: int = 2
    a0: float = 0.0

    def __post_init__(self):
        if not (self.G > 0 and self.lam > 0):
            raise ValueError("Lame parameters must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class FixedStressData:
    """Fixed-stress stabilization for the mass-balance block.

    Attributes:
        l_mat: coefficient per matrix pressure cell.
        l_frac: coefficient per fracture pressure cell.
        D55: diagonal matrix ``weights * l`` over all mass rows (intersection
            rows, if any, are zero).
    """

    l_mat: np.ndarray
    l_frac: np.ndarray
    D55: sps.csr_matrix

    @classmethod
    def zero(cls, n: int) -> "FixedStressData":
        return cls(np.zeros(0), np.zeros(0), sps.csr_matrix((n, n)))


def l_mat_coefficient(p: FixedStressParams) -> float:
    denom = 2.0 * p.G / p.dim + p.lam
    if not denom > 0:
        raise ValueError("nonpositive denominator in matrix fixed-stress coefficient")
    return p.alpha**2 / denom


def inverse_biot_modulus(p: FixedStressParams) -> float:
    return (p.alpha - p.phi0) * (1.0 - p.alpha) / (p.lam + 2.0 * p.G / 3.0)


def l_frac_coefficient(p: FixedStressParams, jump_n) -> np.ndarray:
    """Fracture coefficient; openings below ``a0`` are floored at ``a0``."""
    opening = np.maximum(np.asarray(jump_n, dtype=np.float64), p.a0)
    if p.alpha == 0.0:
        return np.zeros_like(opening)
    denom = p.lam * (inverse_biot_modulus(p) + p.phi0 * p.c_f)
    if not denom > 0:
        raise ValueError("nonpositive denominator in fracture fixed-stress coefficient")
    return opening * p.alpha**2 * p.c_f / denom


def fixed_stress_coefficients(p: FixedStressParams, jump_n, n_matrix: int,
                              matrix_weights=None, fracture_weights=None,
                              n_intersection: int = 0) -> FixedStressData:
    """Assemble ``D55`` for mass rows ordered matrix, fracture, intersection.

    Args:
        p: material data.
        jump_n: normal jump per fracture pressure cell.
        n_matrix: number of matrix pressure cells.
        matrix_weights, fracture_weights: cell-measure scaling matching the
            accumulation terms of the mass rows (default 1).
        n_intersection: trailing rows left unstabilized.
    """
    jump_n = np.atleast_1d(np.asarray(jump_n, dtype=np.float64))
    n_frac = jump_n.size
    l_m = np.full(n_matrix, l_mat_coefficient(p))
    l_f = l_frac_coefficient(p, jump_n) if n_frac else np.zeros(0)
    wm = np.ones(n_matrix) if matrix_weights is None else np.broadcast_to(
        np.asarray(matrix_weights, dtype=np.float64), (n_matrix,))
    wf = np.ones(n_frac) if fracture_weights is None else np.broadcast_to(
        np.asarray(fracture_weights, dtype=np.float64), (n_frac,))
    diag = np.concatenate([wm * l_m, wf * l_f, np.zeros(n_intersection)])
    return FixedStressData(l_m, l_f, sps.diags(diag, format="csr"))


def build_S2_S3(J: BlockMatrix5, S2_55) -> sps.csr_matrix:
    """``S3_55 = S2_55 - J54 diag(J44)^{-1} J45``.

    Raises:
        ZeroDiagonalError: if ``J44`` has a zero diagonal entry.
    """
    S2 = as_csr(S2_55)
    if J.layout.group_sizes[FLUX] == 0:
        return S2
    d = J[FLUX, FLUX].diagonal()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise ZeroDiagonalError(int(zero[0]))
    corr = sparse_matmul(J[MASS, FLUX], sparse_matmul(sps.diags(1.0 / d, format="csr"), J[FLUX, MASS]))
    return as_csr(S2 - corr)


# -- preconditioner P ------------------------------------------------------------


@dataclass(frozen=True)
class PrecondOpts:
    """Subsolver choice.

    Attributes:
        subsolver: ``"direct"`` or ``"amg"``; default for both the mechanics
            and the mass block.
        mechanics, flow: per-block override of ``subsolver``.
        mechanics_amg, flow_amg: AMG setup options.
    """

    subsolver: str = "direct"
    mechanics: str | None = None
    flow: str | None = None
    mechanics_amg: AmgOptions = field(default_factory=lambda: MECHANICS_AMG)
    flow_amg: AmgOptions = field(default_factory=lambda: FLUID_AMG)

    def __post_init__(self):
        for v in (self.subsolver, self.mechanics, self.flow):
            if v is not None and v not in ("direct", "amg"):
                raise ValueError(f"unknown subsolver {v!r}")

    @property
    def mechanics_solver(self) -> str:
        return self.mechanics or self.subsolver

    @property
    def flow_solver(self) -> str:
        return self.flow or self.subsolver


def _make_solver(A, kind: str, amg_opts: AmgOptions, component=None):
    if A.shape[0] == 0:
        return lambda b: np.zeros(0)
    if kind == "direct":
        return DirectFactor(A).solve
    H = amg_setup(A, amg_opts, component=component)
    return H.solve


@dataclass
class PrecondP:
    """Constructed preconditioner for the transformed Jacobian ``J Q_r``."""

    layout: BlockLayout
    Q: TransformQr
    Jt: BlockMatrix5
    J11t_inv: BlockDiagInverse
    S1_22: sps.csr_matrix
    S1_32: sps.csr_matrix
    mechanics: sps.csr_matrix
    S3_55: sps.csr_matrix
    fixed_stress: FixedStressData
    mech_solve: object
    flux_factor: Ilu0Factor | None
    flow_solve: object
    opts: PrecondOpts
    warnings: list = field(default_factory=list)

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Apply ``P^{-1}`` in the order mass, interface flux, mechanics, contact."""
        L = self.layout
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (L.size,):
            raise ValueError(f"vector length {w.shape} != system size {L.size}")
        w1, w2, w3, w4, w5 = L.split(w)
        Jt = self.Jt
        v5 = self._stage("mass", self.flow_solve, w5)
        if self.flux_factor is not None:
            v4 = self._stage("interface_flux", self.flux_factor.solve, w4 - Jt[FLUX, MASS] @ v5)
        else:
            v4 = np.zeros(0)
        rhs23 = np.concatenate([w2 - Jt[FORCE, MASS] @ v5, w3 - Jt[MOMENTUM, MASS] @ v5])
        v23 = self._stage("mechanics", self.mech_solve, rhs23)
        n2 = L.group_sizes[FORCE]
        v2, v3 = v23[:n2], v23[n2:]
        if L.group_sizes[CONTACT]:
            v1 = self._stage("contact", self.J11t_inv.apply, w1 - Jt[CONTACT, FORCE] @ v2)
        else:
            v1 = np.zeros(0)
        return np.concatenate([v1, v2, v3, v4, v5])

    __call__ = apply

    def _stage(self, tag: str, solve, rhs: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(solve(rhs), dtype=np.float64)
        except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
            self._flag(f"{tag}: {exc}")
            return np.zeros_like(rhs)
        if not np.all(np.isfinite(out)):
            self._flag(f"{tag}: non-finite subsolver output")
            return np.where(np.isfinite(out), out, 0.0)
        return out

    def _flag(self, msg: str) -> None:
        if msg not in self.warnings:
            logger.warning("preconditioner stage failed, continuing: %s", msg)
            self.warnings.append(msg)

    def to_dense(self) -> np.ndarray:
        """Dense block upper-triangular matrix whose inverse :meth:`apply` computes
        when every subsolver is exact."""
        L = self.layout
        M = BlockMatrix5(L, {
            (CONTACT, CONTACT): self.Jt[CONTACT, CONTACT],
            (CONTACT, FORCE): self.Jt[CONTACT, FORCE],
            (FORCE, FORCE): self.S1_22,
            (FORCE, MOMENTUM): self.Jt[FORCE, MOMENTUM],
            (FORCE, MASS): self.Jt[FORCE, MASS],
            (MOMENTUM, FORCE): self.S1_32,
            (MOMENTUM, MOMENTUM): self.Jt[MOMENTUM, MOMENTUM],
            (MOMENTUM, MASS): self.Jt[MOMENTUM, MASS],
            (FLUX, FLUX): self.Jt[FLUX, FLUX],
            (FLUX, MASS): self.Jt[FLUX, MASS],
            (MASS, MASS): self.S3_55,
        })
        return assemble_monolithic(M).toarray()


def construct(J: BlockMatrix5, fixed_stress: FixedStressData | None = None,
              opts: PrecondOpts | None = None, validate: bool = True,
              mech_components=None) -> PrecondP:
    """Build the preconditioner for ``J Q_r``.

    Args:
        J: untransformed Jacobian.
        fixed_stress: stabilization data; ``None`` means ``D55 = 0``.
        opts: subsolver choice.
        validate: check the block pattern of ``J`` first.
        mech_components: displacement component (0 = x, 1 = y, ...) of each
            unknown in groups 2 and 3, for AMG. Defaults to alternating.
    """
    opts = opts or PrecondOpts()
    L = J.layout
    if validate:
        validate_pattern(J)
    fs = fixed_stress or FixedStressData.zero(L.group_sizes[MASS])
    if fs.D55.shape != (L.group_sizes[MASS],) * 2:
        raise ValueError("D55 shape does not match the mass block")
    Q = build_transform(J, L.spatial_dim)
    Jt = apply_transform(J, Q)
    S22, S32, J11t_inv = build_S1(Jt, L.spatial_dim)
    mech = as_csr(sps.bmat([[S22, Jt[FORCE, MOMENTUM]], [S32, Jt[MOMENTUM, MOMENTUM]]]))
    S3 = build_S2_S3(Jt, Jt[MASS, MASS] + fs.D55)
    mech_solve = _make_solver(mech, opts.mechanics_solver, opts.mechanics_amg, mech_components)
    flow_solve = _make_solver(S3, opts.flow_solver, opts.flow_amg)
    flux = Ilu0Factor(Jt[FLUX, FLUX]) if L.group_sizes[FLUX] else None
    return PrecondP(L, Q, Jt, J11t_inv, S22, S32, mech, S3, fs, mech_solve, flux,
                    flow_solve, opts)


# -- sequential-scheme operator ------------------------------------------------------


@dataclass
class PhatOperator:
    """``P^^{-1}``: flow pair first, then contact plus mechanics."""

    layout: BlockLayout
    mech_factor: DirectFactor
    flow_factor: DirectFactor
    B: sps.csr_matrix  # coupling of mechanics rows to flow unknowns
    flow_matrix: sps.csr_matrix
    mech_matrix: sps.csr_matrix

    def apply(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        n_m = self.mech_matrix.shape[0]
        v_flow = self.flow_factor.solve(w[n_m:])
        v_mech = self.mech_factor.solve(w[:n_m] - self.B @ v_flow)
        return np.concatenate([v_mech, v_flow])

    __call__ = apply


def build_Phat(J: BlockMatrix5, D55=None) -> PhatOperator:
    """Sequential fixed-stress operator with exact block solves.

    Raises:
        SingularMatrixError: if the contact plus mechanics block is singular.
    """
    L = J.layout
    n5 = L.group_sizes[MASS]
    D55 = sps.csr_matrix((n5, n5)) if D55 is None else as_csr(D55)
    mech_groups = (CONTACT, FORCE, MOMENTUM)
    flow_groups = (FLUX, MASS)
    A = J.sub(mech_groups, mech_groups)
    B = J.sub(mech_groups, flow_groups)
    S = J.sub(flow_groups, flow_groups).tolil()
    n4 = L.group_sizes[FLUX]
    S[n4:, n4:] = S[n4:, n4:] + D55
    S = as_csr(S)
    return PhatOperator(L, DirectFactor(A), DirectFactor(S), B, S, A)
