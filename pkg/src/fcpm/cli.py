"""Command line entry point.

Usage::

    fcpm run CONFIG [--scenario NAME] [--grid 8x8,16x16] [--variant V] [--out DIR]
    fcpm compare REPORT_A REPORT_B
    fcpm export-system CONFIG [--steps N] [--out STEM]

Exit codes: 0 success, 1 solver failure, 2 configuration error.
``FCPM_THREADS`` caps how many sweep points run concurrently.
"""

from __future__ import annotations

import argparse
import logging
import sys

from fcpm.experiments import ConfigError, compare, export_system, load_config, load_report, run

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--scenario")
    p.add_argument("--grid", help="comma separated NXxNY list")
    p.add_argument("--variant", choices=("gmres_direct", "gmres_amg", "richardson_phat"))
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcpm", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment and write reports")
    _add_overrides(p_run)
    p_cmp = sub.add_parser("compare", help="relative change of summary metrics")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_exp = sub.add_parser("export-system", help="write a Jacobian in Matrix Market form")
    _add_overrides(p_exp)
    p_exp.add_argument("--steps", type=int, default=0,
                       help="time steps to solve before exporting")
    return parser


def _fmt(v) -> str:
    return "nan" if v is None else f"{v:.2f}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            print(compare(load_report(args.report_a), load_report(args.report_b)))
            return EXIT_OK
        if args.config is None and args.scenario is None:
            raise ConfigError("a config file or --scenario is required")
        cfg = load_config(args.config, scenario=args.scenario, grid=args.grid,
                          variant=args.variant, out=args.out)
        if args.command == "export-system":
            if args.steps < 0:
                raise ConfigError("--steps must be nonnegative")
            stem = export_system(cfg, args.steps, args.out)
            print(f"wrote {stem}.mtx, {stem}.blocks.json, {stem}.rhs.txt")
            return EXIT_OK
        report = run(cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"fcpm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError) as exc:
        print(f"fcpm: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for rec in report["points"]:
        status = "FAILED" if rec["failed"] else "ok"
        print(f"{rec['grid']:>7} F={rec['F']:<6g} K_n={rec['K_n']:<8.3g} "
              f"linear={_fmt(rec['avg_linear_iters'])} newton={_fmt(rec['avg_newton_iters'])} {status}")
    print(f"reports written to {cfg.out}")
    return EXIT_SOLVER if report["failed_points"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
