"""Restarted GMRES and preconditioned Richardson iteration.

Both drivers take plain callables for the operator and the preconditioner so
they work with sparse matrices, factorizations and composite block operators
alike.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

Operator = Callable[[np.ndarray], np.ndarray]


class StopReason(str, Enum):
    REL_TOL = "rel_tol"
    ABS_TOL = "abs_tol"
    MAX_ITERS = "max_iters"
    BREAKDOWN = "breakdown"


class NonFiniteError(FloatingPointError):
    """NaN or Inf appeared during an iteration."""


@dataclass(frozen=True)
class SolverOpts:
    """Stopping criteria.

    Attributes:
        rel_tol: stop when ``||b - A x|| <= rel_tol * ||b||``.
        abs_tol: or when ``||b - A x|| <= abs_tol``.
        restart: Krylov subspace size between restarts (GMRES only).
        max_iters: total iteration cap.
        divergence_factor: Richardson stops with ``breakdown`` once the
            residual exceeds this multiple of the initial residual.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-15
    restart: int = 30
    max_iters: int = 90
    divergence_factor: float = 1e6

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.restart < 1 or self.max_iters < 1:
            raise ValueError("restart and max_iters must be positive")
        if self.restart > self.max_iters:
            raise ValueError("restart must not exceed max_iters")

    @classmethod
    def gmres_defaults(cls, **kw) -> "SolverOpts":
        return cls(**{"abs_tol": 1e-15, **kw})

    @classmethod
    def richardson_defaults(cls, **kw) -> "SolverOpts":
        return cls(**{"abs_tol": 1e-10, **kw})


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    stop_reason: StopReason = StopReason.MAX_ITERS
    wall_time_s: float = 0.0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "converged": self.converged,
            "stop_reason": self.stop_reason.value,
            "warnings": list(self.warnings),
        }


def _as_operator(A) -> Operator:
    if A is None:
        return lambda v: v.copy()
    if callable(A):
        return A
    if hasattr(A, "solve"):
        return A.solve
    return lambda v: A @ v


def _check_finite(v: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"non-finite values encountered in {where}")


def _stop(res: float, target_rel: float, opts: SolverOpts):
    if res <= target_rel:
        return StopReason.REL_TOL
    if res <= opts.abs_tol:
        return StopReason.ABS_TOL
    return None


def gmres(apply_A, apply_P=None, b=None, opts: SolverOpts | None = None,
          x0: np.ndarray | None = None, side: str = "right"):
    """Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations.

    With ``side="right"`` the Krylov space is built for ``A P`` and the
    monitored residual is the true ``||b - A x||``; ``x = x0 + P y``. With
    ``side="left"`` the space is built for ``P A`` and the monitored residual is
    the preconditioned ``||P (b - A x)||``.

    Args:
        apply_A: matrix, factor object or callable for ``A``.
        apply_P: preconditioner (same accepted forms); ``None`` means identity.
        b: right-hand side.
        opts: stopping criteria; :meth:`SolverOpts.gmres_defaults` if omitted.
        x0: initial guess, zero by default.
        side: ``"right"`` or ``"left"``.

    Returns:
        ``(x, SolveReport)``. ``residual_history`` has ``iterations + 1``
        entries; entries at restart boundaries are recomputed explicitly.

    Raises:
        NonFiniteError: if NaN or Inf show up.
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    opts = opts or SolverOpts.gmres_defaults()
    A = _as_operator(apply_A)
    P = _as_operator(apply_P)
    b = np.asarray(b, dtype=np.float64)
    _check_finite(b, "right-hand side")
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    t0 = time.perf_counter()

    def residual(xv):
        r = b - A(xv)
        return P(r) if side == "left" else r

    r = residual(x)
    _check_finite(r, "initial residual")
    beta = float(np.linalg.norm(r))
    ref = float(np.linalg.norm(P(b))) if side == "left" else float(np.linalg.norm(b))
    target_rel = opts.rel_tol * ref
    report = SolveReport(residual_history=[beta])
    reason = _stop(beta, target_rel, opts)
    if reason is not None:
        report.converged, report.stop_reason = True, reason
        report.wall_time_s = time.perf_counter() - t0
        return x, report

    m = opts.restart
    it = 0
    while it < opts.max_iters:
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n)) if side == "right" else None
        H = np.zeros((m + 1, m))
        cs, sn = np.zeros(m), np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k_used = 0
        happy = False
        for k in range(m):
            if it >= opts.max_iters:
                break
            if side == "right":
                Z[k] = P(V[k])
                w = A(Z[k])
            else:
                w = P(A(V[k]))
            _check_finite(w, "Arnoldi vector")
            for j in range(k + 1):
                H[j, k] = np.dot(w, V[j])
                w = w - H[j, k] * V[j]
            H[k + 1, k] = np.linalg.norm(w)
            for j in range(k):
                tmp = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = tmp
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                k_used = k
                report.stop_reason = StopReason.BREAKDOWN
                happy = None
                break
            cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            h_sub = H[k + 1, k]
            H[k, k], H[k + 1, k] = denom, 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            it += 1
            k_used = k + 1
            res = abs(g[k + 1])
            report.residual_history.append(res)
            if h_sub <= 1e-14 * denom:
                happy = True
                break
            V[k + 1] = w / h_sub
            if _stop(res, target_rel, opts) is not None:
                break
        if k_used > 0:
            y = np.linalg.solve(np.triu(H[:k_used, :k_used]), g[:k_used])
            if side == "right":
                x = x + Z[:k_used].T @ y
            else:
                x = x + V[:k_used].T @ y
        _check_finite(x, "iterate")
        r = residual(x)
        beta = float(np.linalg.norm(r))
        if report.residual_history and k_used > 0:
            report.residual_history[-1] = beta
        reason = _stop(beta, target_rel, opts)
        if reason is not None:
            report.converged, report.stop_reason = True, reason
            break
        if happy is None:
            report.stop_reason = StopReason.BREAKDOWN
            break
        if happy:
            # invariant subspace reached but true residual still above target
            report.stop_reason = StopReason.BREAKDOWN
            break
        report.stop_reason = StopReason.MAX_ITERS
    report.iterations = len(report.residual_history) - 1
    report.wall_time_s = time.perf_counter() - t0
    return x, report


def richardson(apply_A, apply_P=None, b=None, opts: SolverOpts | None = None,
               x0: np.ndarray | None = None):
    """Preconditioned Richardson iteration ``x <- x + P (b - A x)``.

    The recorded residual is the unpreconditioned ``||b - A x||``.

    Returns:
        ``(x, SolveReport)``; ``stop_reason`` is ``breakdown`` when the
        residual grows past ``divergence_factor`` times the initial one.
    """
    opts = opts or SolverOpts.richardson_defaults()
    A = _as_operator(apply_A)
    P = _as_operator(apply_P)
    b = np.asarray(b, dtype=np.float64)
    _check_finite(b, "right-hand side")
    x = np.zeros(b.shape[0]) if x0 is None else np.array(x0, dtype=np.float64)
    t0 = time.perf_counter()
    r = b - A(x)
    res0 = float(np.linalg.norm(r))
    target_rel = opts.rel_tol * float(np.linalg.norm(b))
    report = SolveReport(residual_history=[res0])
    reason = _stop(res0, target_rel, opts)
    while reason is None and report.iterations < opts.max_iters:
        dx = P(r)
        _check_finite(dx, "preconditioned residual")
        x = x + dx
        r = b - A(x)
        res = float(np.linalg.norm(r))
        report.iterations += 1
        report.residual_history.append(res)
        if not np.isfinite(res) or res > opts.divergence_factor * max(res0, 1e-300):
            report.stop_reason = StopReason.BREAKDOWN
            break
        reason = _stop(res, target_rel, opts)
    if reason is not None:
        report.converged, report.stop_reason = True, reason
    elif report.stop_reason != StopReason.BREAKDOWN:
        report.stop_reason = StopReason.MAX_ITERS
    report.wall_time_s = time.perf_counter() - t0
    return x, report
