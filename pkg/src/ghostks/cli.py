"""Command line entry point: ``ghostks simulate | test | sweep | ingest | report``.

Exit status: 0 success / null accepted, 10 null rejected (``test`` only),
2 usage or parameter error, 3 data error (unreadable or invalid files,
grid mismatch, empty spectra).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .config import SCENARIO_NAMES, GridConfig, ScenarioConfig, read_scenario_config
from .errors import FileFormatError, GhostKSError, InvalidParameterError
from .ks import DEFAULT_LEVELS, two_sample_test
from .montecarlo import DEFAULT_TRIALS, sweep
from .simulate import RNG_NAME, fresh_seed, make_rng, simulate_reference, simulate_signal
from .spectra import integrate_roi

EXIT_ACCEPT = 0
EXIT_REJECT = 10
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _level(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"significance level must be in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_grid_args(p):
    p.add_argument("--grid", type=float, nargs=3, metavar=("START", "STOP", "NBINS"),
                   help="uniform wavelength grid, bin centres in nm "
                        "(default: 790 820 121; narrow dip 780 830 201)")


def _grid_config(args):
    if args.grid is None:
        return None
    start, stop, n_bins = args.grid
    if n_bins != int(n_bins):
        raise UsageError("grid bin count must be an integer")
    return GridConfig(start, stop, int(n_bins))


def _seed(args):
    return fresh_seed() if args.seed is None else args.seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghostks", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate reference and object spectra")
    p.add_argument("--config", type=Path, help="scenario config file (overrides flags)")
    p.add_argument("--scenario", choices=SCENARIO_NAMES, default="broad")
    p.add_argument("--alpha", type=float, help="linear slope, 1/nm (broad)")
    p.add_argument("--sigma", type=float, help="dip width, nm (narrow)")
    p.add_argument("--table", type=Path, help="transmittance table file (tabulated)")
    p.add_argument("--nt", type=_positive_int, default=10_000, help="object resources N_T")
    p.add_argument("--nr", type=_positive_int, help="reference resources N_R")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default="", help="prefix for output file names")
    _add_grid_args(p)

    p = sub.add_parser("test", help="KS test of a signal spectrum against a reference")
    p.add_argument("signal", type=Path)
    p.add_argument("reference", type=Path)
    p.add_argument("--levels", type=_level, nargs="+", default=list(DEFAULT_LEVELS),
                   help="significance levels; the first one sets the exit status")
    p.add_argument("--one-sample", action="store_true",
                   help="treat the reference as the exact parent distribution")

    p = sub.add_parser("sweep", help="rejection-rate sweep over (axis1, N_T)")
    p.add_argument("--scenario", choices=("broad", "narrow"), default="broad")
    p.add_argument("--axis", type=float, nargs="+", required=True,
                   help="alpha values (broad) or sigma values (narrow)")
    p.add_argument("--nt", type=_positive_int, nargs="+", required=True)
    p.add_argument("--nr", type=_positive_int)
    p.add_argument("--trials", type=_positive_int, default=DEFAULT_TRIALS)
    p.add_argument("--levels", type=_level, nargs="+", default=list(DEFAULT_LEVELS))
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--resample-reference", action="store_true",
                   help="draw a fresh reference for every trial")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--archive", type=Path, help="also write a JSON archive")
    p.add_argument("--quiet", action="store_true")
    _add_grid_args(p)

    p = sub.add_parser("ingest", help="reduce a count image to a spectrum")
    p.add_argument("image", type=Path)
    p.add_argument("--roi", type=int, nargs=2, metavar=("START", "STOP"), required=True,
                   help="spatial rows START..STOP-1")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("report", help="plot-ready series from a sweep table")
    p.add_argument("sweep", type=Path)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--figure", choices=("bars", "boxes", "all"), default="all")
    return parser


# --------------------------------------------------------------------------


def _scenario_config(args) -> ScenarioConfig:
    if args.config is not None:
        cfg = read_scenario_config(args.config)
        if args.seed is not None:
            cfg = ScenarioConfig(**{**cfg.__dict__, "seed": args.seed})
        return cfg
    tw, tv = (), ()
    if args.scenario == "tabulated":
        if args.table is None:
            raise UsageError("--scenario tabulated needs --table")
        tw, tv = io.load_transmittance_table(args.table)
    return ScenarioConfig(
        family=args.scenario,
        n_signal=args.nt,
        seed=_seed(args),
        alpha=args.alpha,
        sigma=args.sigma,
        n_reference=args.nr,
        table_wavelengths=tw,
        table_values=tv,
        grid=_grid_config(args),
    )


def cmd_simulate(args):
    cfg = _scenario_config(args)
    scen = cfg.build()
    ref = simulate_reference(scen, make_rng(scen.seed, 0))
    sig = simulate_signal(scen, make_rng(scen.seed, 1, 0))
    meta = {"scenario": scen.name, "seed": scen.seed, "rng": RNG_NAME,
            "n_reference": scen.n_reference, "n_signal": scen.n_signal}
    meta.update(dict(scen.params))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ref_path = args.out_dir / f"{args.prefix}reference.csv"
    sig_path = args.out_dir / f"{args.prefix}signal.csv"
    io.save_spectrum(ref, ref_path, {**meta, "role": "reference", "detected": ref.total})
    io.save_spectrum(sig, sig_path, {**meta, "role": "signal", "detected": sig.total})
    print(f"seed={scen.seed} reference_detected={ref.total} signal_detected={sig.total} "
          f"expected_signal={scen.expected_detected():.1f}")
    print(f"wrote {ref_path} {sig_path}")
    return EXIT_ACCEPT


def cmd_test(args):
    sig = io.load_spectrum(args.signal)
    ref = io.load_spectrum(args.reference)
    res = two_sample_test(sig, ref, args.levels, one_sample=args.one_sample)
    print(f"statistic   {res.statistic:.6g}")
    print(f"n_signal    {res.n_signal}")
    print(f"n_reference {res.n_reference}")
    print(f"effective_n {res.effective_n:.6g}")
    print(f"p_value     {res.p_value:.6g}")
    for a, r in zip(res.levels, res.rejections):
        print(f"level {a:g}: {'REJECT (object present)' if r else 'accept (no object)'}")
    print(json.dumps(res.as_dict(), sort_keys=True))
    return EXIT_REJECT if res.rejections[0] else EXIT_ACCEPT


def cmd_sweep(args):
    seed = _seed(args)
    gc = _grid_config(args)
    grid = None if gc is None else gc.build()

    def progress(done, total, cell):
        if not args.quiet:
            rates = " ".join(f"{r:.2f}" for r in cell.rates)
            print(f"[{done}/{total}] axis1={cell.axis1:g} n_t={cell.n_signal} rates={rates}",
                  file=sys.stderr, flush=True)

    res = sweep(args.scenario, args.axis, args.nt, n_trials=args.trials,
                significances=args.levels, master_seed=seed, jobs=args.jobs, grid=grid,
                n_reference=args.nr, resample_reference=args.resample_reference,
                progress=progress)
    io.write_sweep(res, args.out)
    if args.archive is not None:
        io.write_archive(res, args.archive)
    print(f"seed={seed} cells={len(res.cells)} wrote {args.out}")
    return EXIT_ACCEPT


def cmd_ingest(args):
    image, grid = io.load_count_image(args.image)
    spec = integrate_roi(image, args.roi, grid)
    io.save_spectrum(spec, args.out, {"source": args.image.name,
                                      "roi": f"{args.roi[0]} {args.roi[1]}"})
    print(f"detected={spec.total} bins={len(grid)} wrote {args.out}")
    return EXIT_ACCEPT


def cmd_report(args):
    res = io.load_sweep(args.sweep)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"source": args.sweep.name, "family": res.family, "axis": res.axis_name,
            "master_seed": res.master_seed, "n_trials": res.n_trials}
    written = []
    if args.figure in ("bars", "all"):
        cols, rows = io.rejection_bar_series(res)
        path = args.out_dir / "rejection_bars.csv"
        io.write_series(cols, rows, path, meta, kind="rejection bars")
        written.append(path)
    if args.figure in ("boxes", "all"):
        cols, rows = io.pvalue_box_series(res)
        path = args.out_dir / "pvalue_boxes.csv"
        io.write_series(cols, rows, path, meta, kind="p-value boxes")
        written.append(path)
    print("wrote " + " ".join(str(p) for p in written))
    return EXIT_ACCEPT


COMMANDS = {
    "simulate": cmd_simulate,
    "test": cmd_test,
    "sweep": cmd_sweep,
    "ingest": cmd_ingest,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidParameterError) as exc:
        print(f"ghostks {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GhostKSError, FileFormatError, OSError) as exc:
        print(f"ghostks {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
