"""Experiment configuration, batch runs, report comparison and system export.

A config file is plain ``key = value`` text (``#`` starts a comment)::

    scenario = single_frac_richardson
    variant = richardson_phat
    grid = 8x8, 16x16
    F = 0.1, 0.577, 0.8
    K_n = 0, 1.2e9
    out = runs/richardson

Recognized keys are listed in ``CONFIG_KEYS``. Keys left out fall back to the
scenario defaults.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from fcpm.block_system import write_system
from fcpm.krylov import SolverOpts
from fcpm.linear_solvers import VARIANTS, make_solver
from fcpm.toy_model import NewtonError, NewtonOpts, apply_scenario, simulate
from fcpm.toy_model.scenarios import SCENARIOS

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "grid", "variant", "F", "K_n", "avg_linear_iters", "avg_newton_iters", "wall_time_s",
)
RUN_VARIANTS = ("gmres_direct", "gmres_amg", "richardson_phat")
DEFAULT_VARIANT = {
    "single_frac_richardson": "richardson_phat",
    "single_frac_gmres": "gmres_direct",
    "refinement": "gmres_amg",
    "biot_column": "gmres_direct",
}
CONFIG_KEYS = {
    "scenario": "scenario name",
    "variant": "gmres_direct | gmres_amg | richardson_phat",
    "grid": "comma separated NXxNY (or N for a square grid)",
    "F": "friction coefficients to sweep",
    "K_n": "normal stiffnesses (Pa) to sweep",
    "out": "output directory",
    "rel_tol": "linear relative tolerance",
    "abs_tol": "linear absolute tolerance",
    "restart": "GMRES restart length",
    "max_iters": "linear iteration cap",
    "newton_rtol": "Newton relative tolerance",
    "max_newton": "Newton iteration cap",
    "n_steps": "number of time steps",
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    scenario: str
    variant: str
    grids: tuple
    F: tuple
    K_n: tuple
    out: Path
    solver_overrides: dict = field(default_factory=dict)
    newton_rtol: float = 1e-7
    max_newton: int = 30
    n_steps: int | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {RUN_VARIANTS}")
        if not self.grids:
            raise ConfigError("at least one grid is required")
        for nx, ny in self.grids:
            if nx < 1 or ny < 2 or ny % 2:
                raise ConfigError(f"invalid grid {nx}x{ny}: need nx >= 1 and even ny >= 2")
        if any(not (f >= 0) for f in self.F):
            raise ConfigError("friction coefficients must be nonnegative")
        if any(not (k >= 0) for k in self.K_n):
            raise ConfigError("normal stiffness values must be nonnegative")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError("n_steps must be positive")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "grids": [list(g) for g in self.grids],
            "F": list(self.F),
            "K_n": list(self.K_n),
            "solver_overrides": dict(self.solver_overrides),
            "newton_rtol": self.newton_rtol,
            "max_newton": self.max_newton,
            "n_steps": self.n_steps,
        }

    def points(self) -> list[tuple]:
        """Sweep points ``((nx, ny), F, K_n)`` in a fixed order."""
        return list(itertools.product(self.grids, self.F, self.K_n))


def _floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma separated numbers, got {text!r}") from None


def _grids(text: str) -> tuple:
    grids = []
    for tok in (t.strip().lower() for t in text.split(",")):
        if not tok:
            continue
        parts = tok.split("x")
        try:
            dims = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"grid: cannot parse {tok!r}") from None
        if len(dims) == 1:
            dims = dims * 2
        if len(dims) != 2:
            raise ConfigError(f"grid: cannot parse {tok!r}")
        grids.append(tuple(dims))
    return tuple(grids)


def read_config_file(path) -> dict:
    """Raw ``key -> value`` strings from a config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["run"])


def build_config(values: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate raw values and fill scenario defaults."""
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    name = values.get("scenario")
    if not name:
        raise ConfigError("scenario is required")
    try:
        sc = apply_scenario(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    variant = values.get("variant") or DEFAULT_VARIANT[name]
    if variant not in RUN_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {RUN_VARIANTS}")
    grids = _grids(values["grid"]) if values.get("grid") else tuple(sc.grids)
    F = _floats(values["F"], "F") if values.get("F") else tuple(
        sc.sweep.get("F", (sc.material.contact.F,)))
    K_n = _floats(values["K_n"], "K_n") if values.get("K_n") else tuple(
        sc.sweep.get("K_n", (sc.material.contact.K_n,)))
    overrides = {}
    for key, cast in (("rel_tol", float), ("abs_tol", float), ("restart", int),
                      ("max_iters", int)):
        if values.get(key):
            try:
                overrides[key] = cast(values[key])
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {values[key]!r}") from None
    try:
        newton_rtol = float(values.get("newton_rtol", 1e-7))
        max_newton = int(values.get("max_newton", 30))
        n_steps = int(values["n_steps"]) if values.get("n_steps") else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(values.get("out") or f"runs/{name}")
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return ExperimentConfig(name, variant, grids, F, K_n, out, overrides, newton_rtol,
                            max_newton, n_steps)


def load_config(path, **flag_overrides) -> ExperimentConfig:
    """Config from a file with command-line overrides applied on top."""
    values = read_config_file(path) if path is not None else {}
    for key, val in flag_overrides.items():
        if val is not None:
            values[key] = str(val)
    return build_config(values)


def _solver(cfg: ExperimentConfig):
    if not cfg.solver_overrides:
        return make_solver(cfg.variant)
    base = (SolverOpts.richardson_defaults(restart=1, max_iters=500)
            if cfg.variant == "richardson_phat" else SolverOpts.gmres_defaults())
    try:
        opts = replace(base, **cfg.solver_overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return make_solver(cfg.variant, opts=opts)


def run_point(cfg: ExperimentConfig, grid, F: float, K_n: float) -> dict:
    """Simulate one sweep point; failures are recorded, not raised."""
    sc = apply_scenario(cfg.scenario)
    n_steps = cfg.n_steps or sc.n_steps
    material = sc.material.updated(F=F, K_n=K_n)
    model = sc.build(grid[0], grid[1], material)
    solver = _solver(cfg)
    opts = NewtonOpts(rtol=cfg.newton_rtol, max_newton=cfg.max_newton)
    rec = {"grid": f"{grid[0]}x{grid[1]}", "variant": cfg.variant, "F": F, "K_n": K_n,
           "n_dofs": model.layout.size, "failed": False, "error": None, "steps": []}
    wall = 0.0
    try:
        result = simulate(model, n_steps, solver, opts, x0=sc.initial_state(model))
    except (NewtonError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        logger.warning("point %s F=%g K_n=%g failed: %s", rec["grid"], F, K_n, exc)
        rec["failed"], rec["error"] = True, str(exc)
        rec["avg_linear_iters"] = rec["avg_newton_iters"] = math.nan
        rec["wall_time_s"] = math.nan
        return rec
    for rep in result.reports:
        rec["steps"].append(rep.to_dict())
        wall += rep.wall_time_s
    rec["avg_linear_iters"] = result.avg_linear_iterations()
    rec["avg_newton_iters"] = result.avg_newton_iterations()
    rec["wall_time_s"] = wall
    return rec


def _strip_timing(rec: dict) -> dict:
    out = {k: (None if isinstance(v, float) and math.isnan(v) else v)
           for k, v in rec.items() if k != "wall_time_s"}
    out["steps"] = []
    for step in rec["steps"]:
        step = dict(step)
        step["linear"] = [dict(lin) for lin in step["linear"]]
        out["steps"].append(step)
    return out


def averages_from_records(rec: dict) -> tuple[float, float]:
    """Recompute ``(avg_linear_iters, avg_newton_iters)`` from raw step records."""
    if rec.get("failed"):
        return math.nan, math.nan
    lin = [len(l["residual_history"]) - 1 for s in rec["steps"] for l in s["linear"]]
    newton = [s["iterations"] for s in rec["steps"]]
    return (float(np.mean(lin)) if lin else 0.0,
            float(np.mean(newton)) if newton else 0.0)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FCPM_THREADS", "1")))
    except ValueError:
        return 1


def run(cfg: ExperimentConfig) -> dict:
    """Run every sweep point and write ``report.json``, ``timing.json`` and ``summary.csv``.

    ``report.json`` holds no timings so identical configs give identical
    files; wall times go to ``timing.json`` and the summary.

    Returns:
        The report dictionary (including a ``failed_points`` count).
    """
    points = cfg.points()
    n_threads = min(_threads(), len(points))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            records = list(pool.map(lambda p: run_point(cfg, *p), points))
    else:
        records = [run_point(cfg, *p) for p in points]
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema": "fcpm-report/1",
        "config": cfg.to_dict(),
        "points": [_strip_timing(r) for r in records],
        "failed_points": sum(r["failed"] for r in records),
    }
    (cfg.out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n",
                                         encoding="utf-8")
    timing = [{"grid": r["grid"], "F": r["F"], "K_n": r["K_n"], "wall_time_s": r["wall_time_s"]}
              for r in records]
    (cfg.out / "timing.json").write_text(json.dumps(timing, indent=1) + "\n", encoding="utf-8")
    with open(cfg.out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in records:
            w.writerow([r["grid"], r["variant"], repr(r["F"]), repr(r["K_n"]),
                        f"{r['avg_linear_iters']:.4f}", f"{r['avg_newton_iters']:.4f}",
                        f"{r['wall_time_s']:.3f}"])
    return report


def summary_metrics(report: dict) -> dict:
    """``(grid, F, K_n) -> {metric: value}`` for :func:`compare`."""
    out = {}
    for rec in report["points"]:
        lin, newton = averages_from_records(rec)
        out[(rec["grid"], rec["F"], rec["K_n"])] = {
            "avg_linear_iters": lin, "avg_newton_iters": newton}
    return out


def load_report(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    if not path.exists():
        raise FileNotFoundError(f"report not found: {path}")
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc.msg})") from None
    if report.get("schema") != "fcpm-report/1" or "points" not in report:
        raise ConfigError(f"{path}: not a run report")
    return report


def _rel_change(a: float, b: float) -> float:
    if a is None or b is None or math.isnan(a) or math.isnan(b):
        return math.nan
    if a == b:
        return 0.0
    return (b - a) / abs(a) if a != 0 else math.inf


def compare(report_a: dict, report_b: dict) -> str:
    """Per-metric relative change table ``(b - a) / |a|`` over matching points.

    Points are matched on grid, F and K_n, ignoring the variant so that two
    solvers on the same setup can be compared.

    Raises:
        ConfigError: if the reports share no sweep point.
    """
    ma, mb = summary_metrics(report_a), summary_metrics(report_b)
    keys = [k for k in ma if k in mb]
    if not keys:
        raise ConfigError("reports have no sweep point in common")
    va = report_a["config"]["variant"]
    vb = report_b["config"]["variant"]
    lines = [f"a = {va}, b = {vb}",
             f"{'grid':>8} {'F':>7} {'K_n':>9} {'metric':>17} {'a':>9} {'b':>9} {'rel':>9}"]
    for grid, F, K_n in keys:
        for metric in ("avg_linear_iters", "avg_newton_iters"):
            a, b = ma[(grid, F, K_n)][metric], mb[(grid, F, K_n)][metric]
            lines.append(f"{grid:>8} {F:>7.3g} {K_n:>9.2g} {metric:>17} {a:>9.3f} {b:>9.3f} "
                         f"{_rel_change(a, b):>+9.3f}")
    return "\n".join(lines)


def export_system(cfg: ExperimentConfig, steps: int = 0, out=None) -> Path:
    """Write the Jacobian and residual at the start of time step ``steps + 1``.

    Uses the first grid and sweep point of ``cfg``; earlier steps are solved
    with the sparse direct solver.
    """
    sc = apply_scenario(cfg.scenario)
    grid = cfg.grids[0]
    model = sc.build(grid[0], grid[1], sc.material.updated(F=cfg.F[0], K_n=cfg.K_n[0]))
    x = sc.initial_state(model)
    if steps:
        x = simulate(model, steps, make_solver("direct"), x0=x).final_state
    model.begin_step(x)
    cells = model.classify(x)
    R = model.residual(x, cells)
    J = model.jacobian(x, cells)
    path = Path(out) if out is not None else cfg.out / f"system_{grid[0]}x{grid[1]}"
    return write_system(J, -R, path)
