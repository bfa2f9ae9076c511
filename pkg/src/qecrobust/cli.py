"""Command line entry point: ``qecrobust figure1 | mixing | pauli-robustness``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import PRESETS, load_config, preset, run

DEFAULT_PRESET = {"figure1": "figure1", "mixing": "fig2c", "pauli-robustness": "extremal-pd"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qecrobust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("figure1", "mixing", "pauli-robustness"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI experiment file")
        p.add_argument("--preset", help=f"built-in experiment (default {DEFAULT_PRESET[name]})")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--grid", type=int, help="number of grid points")
        p.add_argument("--tol", type=float, help="SDP residual tolerance")
        p.add_argument("--cold-start", action="store_true", help="solve grid points independently")
        p.add_argument("--workers", type=int, help="processes for cold-start mode")
        p.add_argument("--no-refine", action="store_true", help="skip bisection around derivative peaks")
        p.add_argument("-v", "--verbose", action="store_true", help="stream solver diagnostics CSV to stderr")
    sub.add_parser("presets", help="list built-in presets")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, params in PRESETS.items():
            print(f"{name:16s} {params['kind']}")
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset or DEFAULT_PRESET[args.command])
    if cfg.kind != args.command:
        print(f"error: experiment '{cfg.name}' is of kind {cfg.kind}, not {args.command}", file=sys.stderr)
        return 2
    grid = cfg.grid
    if args.grid:
        grid = replace(grid, points=args.grid)
    if args.no_refine:
        grid = replace(grid, refine=False)
    cfg = replace(
        cfg,
        grid=grid,
        out_dir=args.out or cfg.out_dir,
        cold_start=args.cold_start or cfg.cold_start,
        workers=args.workers or cfg.workers,
        solver=replace(cfg.solver, tol=args.tol) if args.tol else cfg.solver,
    )
    kwargs = {"diagnostics": sys.stderr} if args.verbose and cfg.kind == "mixing" else {}
    result = run(cfg, **kwargs)
    print(f"wrote {result.csv_path}")
    if result.svg_path:
        print(f"wrote {result.svg_path}")
    for key, value in result.summary.items():
        print(f"{key} = {value}")
    if result.failed:
        print("error: at least one SDP solve did not converge", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
