"""Run every built-in preset and collect the summaries in one table.

    python scripts/reproduce_figures.py --out results
    python scripts/reproduce_figures.py --only fig2c fig3-zoom
"""

import argparse
import time
from pathlib import Path

from qecrobust.experiments import PRESETS, preset, run, write_csv


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--only", nargs="*", default=None, help="subset of presets")
    args = parser.parse_args()
    names = args.only or list(PRESETS)
    rows = []
    for name in names:
        start = time.perf_counter()
        result = run(preset(name, out_dir=args.out))
        elapsed = time.perf_counter() - start
        print(f"{name:14s} {elapsed:7.1f}s  {result.csv_path}")
        for key, value in result.summary.items():
            rows.append((name, key, value))
        if result.failed:
            rows.append((name, "failed", 1))
    write_csv(args.out / "summary.csv", ["preset", "quantity", "value"], rows)
    print(f"summary in {args.out / 'summary.csv'}")


if __name__ == "__main__":
    main()
