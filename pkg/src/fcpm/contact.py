"""Frictional contact algebra for a single fracture cell.

Vectors are in local fracture coordinates: component 0 is normal, the
remaining ``D - 1`` components are tangential. Tractions follow the
convention that compression is negative (``lambda_n < 0`` in contact).

The tangential slip ``du_t`` is the tangential jump increment over the
current time step. The Coulomb bound is ``b = -F * lambda_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class ContactState(str, Enum):
    OPEN = "open"
    STICK = "stick"
    SLIDE = "slide"


class GapError(ValueError):
    """The normal-stiffness law is evaluated outside its range."""


@dataclass(frozen=True)
class ContactParams:
    """Contact law parameters.

    Attributes:
        F: friction coefficient.
        c: augmented Lagrangian constant (Pa/m).
        K_n: fracture normal stiffness (Pa/m); 0 gives a rigid-closure limit.
        du_max: maximum normal closure (m).
        theta: shear dilation angle (rad).
        g0: steady-state gap (m).
        eps_open: friction bounds at or below this value count as open (Pa).
    """

    F: float = 0.577
    c: float = 1.0
    K_n: float = 1.2e9
    du_max: float = 5e-4
    theta: float = 0.0
    g0: float = 0.0
    eps_open: float = 0.0

    def __post_init__(self):
        if not self.F >= 0:
            raise ValueError("friction coefficient must be nonnegative")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.du_max > 0:
            raise ValueError("du_max must be positive")
        if not self.K_n >= 0:
            raise ValueError("K_n must be nonnegative")
        if not self.eps_open >= 0:
            raise ValueError("eps_open must be nonnegative")


def gap(jump_t, lam_n: float, p: ContactParams) -> float:
    """Barton-Bandis gap with shear dilation.

    Args:
        jump_t: tangential displacement jump (total, not the increment).
        lam_n: normal traction.
        p: contact parameters.

    Raises:
        GapError: if ``du_max * K_n - lam_n <= 0``.
    """
    shear = float(np.linalg.norm(np.atleast_1d(jump_t))) * math.tan(p.theta)
    if p.K_n == 0.0 and lam_n <= 0.0:
        # zero stiffness: the fracture closes fully under any compression
        return p.g0 - p.du_max + shear
    denom = p.du_max * p.K_n - lam_n
    if not denom > 0.0:
        raise GapError(
            f"nonphysical stiffness state: du_max*K_n - lambda_n = {denom:g} <= 0"
        )
    return p.g0 + p.du_max * lam_n / denom + shear


def beta_b(lam_n: float, p: ContactParams) -> float:
    """Derivative of the gap with respect to ``lambda_n``."""
    if p.K_n == 0.0 or lam_n > 0.0:
        return 0.0
    denom = p.du_max * p.K_n - lam_n
    return p.du_max**2 * p.K_n / denom**2


def _split(v, D=None):
    v = np.asarray(v, dtype=np.float64).ravel()
    if np.any(np.isnan(v)):
        raise ValueError("NaN in contact input")
    if D is not None and v.size != D:
        raise ValueError(f"expected a vector of length {D}, got {v.size}")
    return float(v[0]), v[1:].copy()


@dataclass(frozen=True)
class ContactCellState:
    """Frozen contact state of one cell at the linearization point.

    ``state`` is the tangential branch; ``closed`` is the normal branch.
    """

    state: ContactState
    closed: bool
    lam0: np.ndarray
    jump0: np.ndarray
    du_t0: np.ndarray
    y: np.ndarray
    eps_mismatch: float
    beta_B: float
    b0: float
    gap0: float

    @property
    def dim(self) -> int:
        return self.lam0.size


def classify(lam0, jump0, du_t0, p: ContactParams) -> ContactCellState:
    """Select the complementarity branches at a given state.

    Args:
        lam0: traction ``[lambda_n, lambda_t...]``.
        jump0: displacement jump ``[u_n, u_t...]`` (total).
        du_t0: tangential jump increment over the time step.
        p: contact parameters.
    """
    lam_n, lam_t = _split(lam0)
    D = lam_t.size + 1
    u_n, u_t = _split(jump0, D)
    du_t = np.asarray(du_t0, dtype=np.float64).ravel()
    if du_t.size != D - 1 or np.any(np.isnan(du_t)):
        raise ValueError("tangential increment has wrong length or is NaN")
    g = gap(u_t, min(lam_n, 0.0), p)
    closed = lam_n + p.c * (u_n - g) < 0.0
    b0 = -p.F * lam_n
    y = lam_t + p.c * du_t
    ny = float(np.linalg.norm(y))
    if b0 <= p.eps_open:
        state = ContactState.OPEN
    elif b0 > ny:
        state = ContactState.STICK
    else:
        state = ContactState.SLIDE
    return ContactCellState(
        state=state,
        closed=bool(closed),
        lam0=np.concatenate([[lam_n], lam_t]),
        jump0=np.concatenate([[u_n], u_t]),
        du_t0=du_t,
        y=y,
        eps_mismatch=float(np.linalg.norm(lam_t) - p.F * abs(lam_n)),
        beta_B=beta_b(min(lam_n, 0.0), p) if closed else 0.0,
        b0=b0,
        gap0=g,
    )


def complementarity_residual(cell: ContactCellState, lam, jump, du_t,
                             p: ContactParams) -> np.ndarray:
    """``(C_n, C_t)`` evaluated on the branches frozen in ``cell``."""
    lam_n, lam_t = _split(lam, cell.dim)
    u_n, u_t = _split(jump, cell.dim)
    du_t = np.asarray(du_t, dtype=np.float64).ravel()
    if cell.closed:
        C_n = -p.c * (u_n - gap(u_t, min(lam_n, 0.0), p))
    else:
        C_n = lam_n
    b = -p.F * lam_n
    y = lam_t + p.c * du_t
    if cell.state is ContactState.OPEN:
        C_t = lam_t
    elif cell.state is ContactState.STICK:
        C_t = b * p.c * du_t
    else:
        C_t = b * y - lam_t * np.linalg.norm(y)
    return np.concatenate([[C_n], C_t])


def complementarity_residual_max(lam, jump, du_t, p: ContactParams) -> np.ndarray:
    """``(C_n, C_t)`` in max form, with branches chosen by the arguments."""
    lam_n, lam_t = _split(lam)
    u_n, u_t = _split(jump, lam_t.size + 1)
    du_t = np.asarray(du_t, dtype=np.float64).ravel()
    g = gap(u_t, min(lam_n, 0.0), p)
    C_n = lam_n + max(0.0, -lam_n - p.c * (u_n - g))
    b = -p.F * lam_n
    y = lam_t + p.c * du_t
    chi = 1.0 if b <= p.eps_open else 0.0
    C_t = (-lam_t * max(b, np.linalg.norm(y)) + max(b, 0.0) * y) * (1 - chi) + chi * lam_t
    return np.concatenate([[C_n], C_t])


def linearize_cell(cell: ContactCellState, p: ContactParams):
    """Derivatives of the frozen-branch residual at the frozen state.

    Returns:
        ``(dC_dlam, dC_djump)``, both D x D. Columns of ``dC_djump`` are
        ``[u_n, u_t...]``; the tangential columns are derivatives with respect
        to the increment, equal to those with respect to the total jump.

    Raises:
        ZeroDivisionError: for a sliding cell with ``y = 0``, where the
            sliding branch has no derivative.
    """
    D = cell.dim
    Dt = D - 1
    c = p.c
    A = np.zeros((D, D))
    B = np.zeros((D, D))
    if cell.closed:
        A[0, 0] = c * cell.beta_B
        B[0, 0] = -c
        u_t = cell.jump0[1:]
        nt = np.linalg.norm(u_t)
        if nt > 0.0 and p.theta != 0.0:
            B[0, 1:] = c * math.tan(p.theta) * u_t / nt
    else:
        A[0, 0] = 1.0
    I = np.eye(Dt)
    if cell.state is ContactState.OPEN:
        A[1:, 1:] = I
    elif cell.state is ContactState.STICK:
        A[1:, 0] = -c * p.F * cell.du_t0
        B[1:, 1:] = c * cell.b0 * I
    else:
        ny = float(np.linalg.norm(cell.y))
        if ny == 0.0:
            raise ZeroDivisionError("sliding branch undefined for y = 0")
        e = cell.y / ny
        lam_t = cell.lam0[1:]
        A[1:, 0] = -p.F * cell.y
        A[1:, 1:] = (cell.b0 - ny) * I - np.outer(lam_t, e)
        B[1:, 1:] = c * (cell.b0 * I - np.outer(lam_t, e))
    return A, B
