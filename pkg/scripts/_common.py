"""Shared helpers for the experiment scripts."""

import argparse
import sys
import time
from pathlib import Path

from ghostks import io
from ghostks.montecarlo import sweep

NT_GRID = (300, 1000, 3000, 10_000, 30_000)


def sweep_parser(description, default_out):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--nt", type=int, nargs="+", default=list(NT_GRID))
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path(default_out))
    return p


def run_and_save(family, axis, args):
    t0 = time.perf_counter()
    res = sweep(family, axis, args.nt, n_trials=args.trials, master_seed=args.seed,
                jobs=args.jobs,
                progress=lambda d, t, c: print(f"\r[{d}/{t}]", end="", file=sys.stderr))
    print(f"\n{family}: {len(res.cells)} cells in {time.perf_counter() - t0:.1f}s",
          file=sys.stderr)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    io.write_sweep(res, args.out_dir / "sweep.csv")
    io.write_archive(res, args.out_dir / "sweep.json")
    io.write_series(*io.rejection_bar_series(res), args.out_dir / "rejection_bars.csv")
    io.write_series(*io.pvalue_box_series(res), args.out_dir / "pvalue_boxes.csv")
    return res


def print_table(res, level=0.05, label="axis"):
    print(f"rejection rate at {level}")
    print(f"{label:>8} " + " ".join(f"{n:>7d}" for n in res.n_signal_values))
    for a, row in zip(res.axis1_values, res.rate_table(level)):
        print(f"{a:>8g} " + " ".join(f"{r:>7.2f}" for r in row))
