"""Linear solver strategies the Newton driver can call.

Each strategy maps ``(J, rhs, fixed_stress)`` to ``(dx, SolveReport)`` where
``J`` is the untransformed block Jacobian.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from fcpm.block_system import BlockMatrix5, assemble_monolithic
from fcpm.krylov import SolveReport, SolverOpts, StopReason, gmres, richardson
from fcpm.precond import (
    FixedStressData,
    PrecondOpts,
    build_Phat,
    construct,
    recover_solution,
)
from fcpm.subsolvers import AmgOptions, DirectFactor
from fcpm.subsolvers.amg import FLUID_AMG, MECHANICS_AMG

VARIANTS = ("gmres_direct", "gmres_amg", "richardson_phat", "direct")


@dataclass
class DirectLinearSolver:
    """Sparse LU on the monolithic Jacobian; a reference, not a preconditioner."""

    name: str = "direct"

    def __call__(self, J: BlockMatrix5, rhs, fs=None, components=None):
        t0 = time.perf_counter()
        A = assemble_monolithic(J)
        x = DirectFactor(A).solve(rhs)
        res = float(np.linalg.norm(rhs - A @ x))
        rep = SolveReport(iterations=1, residual_history=[float(np.linalg.norm(rhs)), res],
                          converged=True, stop_reason=StopReason.REL_TOL,
                          wall_time_s=time.perf_counter() - t0)
        return x, rep


@dataclass
class GmresBlockSolver:
    """Right-preconditioned GMRES on ``J Q_r`` with the nested Schur preconditioner.

    Attributes:
        subsolver: ``"direct"`` or ``"amg"`` for the mechanics and mass blocks.
        opts: GMRES stopping criteria.
    """

    subsolver: str = "direct"
    opts: SolverOpts = field(default_factory=SolverOpts.gmres_defaults)
    mechanics_amg: AmgOptions = field(default_factory=lambda: MECHANICS_AMG)
    flow_amg: AmgOptions = field(default_factory=lambda: FLUID_AMG)

    @property
    def name(self) -> str:
        return f"gmres_{self.subsolver}"

    def __call__(self, J: BlockMatrix5, rhs, fs: FixedStressData | None = None,
                 components=None):
        t0 = time.perf_counter()
        mech_amg = self.mechanics_amg
        P = construct(J, fs, PrecondOpts(subsolver=self.subsolver, mechanics_amg=mech_amg,
                                         flow_amg=self.flow_amg),
                      mech_components=components)
        At = assemble_monolithic(P.Jt)
        xt, rep = gmres(At, P.apply, rhs, self.opts)
        rep.warnings.extend(P.warnings)
        rep.wall_time_s = time.perf_counter() - t0
        return recover_solution(P.Q, xt), rep


@dataclass
class RichardsonPhatSolver:
    """Richardson iteration with the sequential fixed-stress operator."""

    opts: SolverOpts = field(
        default_factory=lambda: SolverOpts.richardson_defaults(restart=1, max_iters=500)
    )
    use_fixed_stress: bool = True
    name: str = "richardson_phat"

    def __call__(self, J: BlockMatrix5, rhs, fs: FixedStressData | None = None,
                 components=None):
        t0 = time.perf_counter()
        D55 = fs.D55 if (fs is not None and self.use_fixed_stress) else None
        Phat = build_Phat(J, D55)
        A = assemble_monolithic(J)
        x, rep = richardson(A, Phat.apply, rhs, self.opts)
        rep.wall_time_s = time.perf_counter() - t0
        return x, rep


def make_solver(variant: str, **kw):
    """Strategy by name: one of ``VARIANTS``."""
    if variant == "gmres_direct":
        return GmresBlockSolver("direct", **kw)
    if variant == "gmres_amg":
        return GmresBlockSolver("amg", **kw)
    if variant == "richardson_phat":
        return RichardsonPhatSolver(**kw)
    if variant == "direct":
        return DirectLinearSolver()
    raise ValueError(f"unknown solver variant {variant!r}; expected one of {VARIANTS}")
