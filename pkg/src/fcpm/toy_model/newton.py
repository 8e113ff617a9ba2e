"""Semi-smooth Newton driver and time stepping for :class:`ToyModel`."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from fcpm.krylov import SolveReport

logger = logging.getLogger(__name__)


class NewtonError(RuntimeError):
    """Newton failed; ``history`` holds the residual norms."""

    def __init__(self, message: str, history):
        self.history = list(history)
        super().__init__(f"{message}; residual history {['%.3e' % h for h in self.history]}")


@dataclass(frozen=True)
class NewtonOpts:
    """Newton stopping criteria.

    Attributes:
        rtol: stop when ``||R|| <= rtol * ||R_0||``.
        atol: or when ``||R|| <= atol``.
        max_newton: iteration cap.
        max_increases: consecutive residual increases tolerated before
            declaring divergence.
        max_backtracks: step halvings tried when a full step increases the
            residual; 0 disables the safeguard. If no shorter step helps the
            full step is kept, so contact states can still switch.
    """

    rtol: float = 1e-7
    atol: float = 1e-15
    max_newton: int = 30
    max_increases: int = 5
    max_backtracks: int = 6


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    linear_reports: list = field(default_factory=list)
    state_counts: list = field(default_factory=list)
    converged: bool = False
    wall_time_s: float = 0.0

    @property
    def linear_iterations(self) -> list[int]:
        return [r.iterations for r in self.linear_reports]

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "converged": self.converged,
            "state_counts": self.state_counts,
            "linear": [r.to_dict() for r in self.linear_reports],
        }


def newton_solve(model, x0: np.ndarray, linear_solver, opts: NewtonOpts | None = None,
                 use_fixed_stress: bool = True):
    """Solve ``R(x) = 0`` for the current time step.

    Contact branches are selected at the current iterate, frozen for the
    Jacobian and the linear solve, and selected again after the update.

    Args:
        model: a :class:`~fcpm.toy_model.assembly.ToyModel` after
            ``begin_step``.
        x0: initial iterate, normally the previous converged state.
        linear_solver: callable ``(J, rhs, fixed_stress, components)`` returning
            ``(dx, SolveReport)``.
        opts: stopping criteria.
        use_fixed_stress: pass the fixed-stress data to the linear solver.

    Returns:
        ``(x, NewtonReport)``.

    Raises:
        NewtonError: on divergence or when ``max_newton`` is reached.
    """
    opts = opts or NewtonOpts()
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64)
    cells = model.classify(x)
    R = model.residual(x, cells)
    r0 = float(np.linalg.norm(R))
    rep = NewtonReport(residual_history=[r0], state_counts=[model.state_counts(cells)])
    increases = 0
    res = r0
    # the linear solver cannot resolve updates below its own absolute floor
    lin_opts = getattr(linear_solver, "opts", None)
    atol = max(opts.atol, getattr(lin_opts, "abs_tol", 0.0))
    while not (res <= opts.rtol * r0 or res <= atol):
        if rep.iterations >= opts.max_newton:
            raise NewtonError(f"no convergence in {opts.max_newton} Newton iterations",
                              rep.residual_history)
        J = model.jacobian(x, cells)
        fs = model.fixed_stress(x) if use_fixed_stress else None
        dx, lin = linear_solver(J, -R, fs, model.mech_components)
        if not isinstance(lin, SolveReport):
            raise TypeError("linear solver must return a SolveReport")
        if not lin.converged:
            logger.warning("linear solve did not converge (%s); accepting it",
                           lin.stop_reason.value)
        rep.linear_reports.append(lin)
        x, cells, R, new = _take_step(model, x, dx, res, opts.max_backtracks)
        if not np.isfinite(new):
            raise NewtonError("non-finite residual", rep.residual_history + [new])
        increases = increases + 1 if new > res else 0
        res = new
        rep.iterations += 1
        rep.residual_history.append(res)
        rep.state_counts.append(model.state_counts(cells))
        if increases >= opts.max_increases:
            raise NewtonError(f"residual grew in {increases} consecutive iterations",
                              rep.residual_history)
    rep.converged = True
    rep.wall_time_s = time.perf_counter() - t0
    return x, rep


def _trial(model, x):
    cells = model.classify(x)
    R = model.residual(x, cells)
    return x, cells, R, float(np.linalg.norm(R))


def _take_step(model, x, dx, res, max_backtracks):
    full = _trial(model, x + dx)
    if full[3] <= res or not np.isfinite(full[3]):
        return full
    step = 1.0
    for _ in range(max_backtracks):
        step *= 0.5
        cand = _trial(model, x + step * dx)
        if cand[3] < res:
            return cand
    return full


@dataclass
class SimulationResult:
    states: list
    reports: list

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def avg_linear_iterations(self) -> float:
        its = [it for r in self.reports for it in r.linear_iterations]
        return float(np.mean(its)) if its else 0.0

    def avg_newton_iterations(self) -> float:
        return float(np.mean([r.iterations for r in self.reports])) if self.reports else 0.0


def simulate(model, n_steps: int, linear_solver, opts: NewtonOpts | None = None,
             x0: np.ndarray | None = None, use_fixed_stress: bool = True) -> SimulationResult:
    """Implicit Euler time stepping; each step starts from the last converged state.

    Without ``x0`` the run starts from :meth:`ToyModel.equilibrium_state`.
    """
    x = model.equilibrium_state() if x0 is None else np.array(x0, dtype=np.float64)
    model.reset(x)
    states, reports = [], []
    for step in range(n_steps):
        x, rep = newton_solve(model, x, linear_solver, opts, use_fixed_stress)
        logger.info("step %d: %d Newton iterations, states %s", step + 1,
                    rep.iterations, rep.state_counts[-1])
        states.append(x.copy())
        reports.append(rep)
        model.begin_step(x)
    return SimulationResult(states, reports)
