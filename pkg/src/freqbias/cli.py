"""Command line entry point: ``freqbias <command> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from . import io as fio
from .analysis import ensemble_aggregate, estimate_kappa
from .experiments import (
    ConfigError,
    ExperimentFailure,
    compare_dirs,
    default_workers,
    make_plots,
    run_experiment,
    run_fem_only,
)


def _cmd_run(args):
    out = run_experiment(args.config, workers=args.workers, output_dir=args.output)
    print(out)


def _cmd_fem(args):
    print(run_fem_only(args.config, output_dir=args.output))


def _cmd_kappa(args):
    traces = [fio.read_trace(p) for p in args.traces]
    if len(traces) == 1:
        prof = estimate_kappa(traces[0], args.window, args.floor, args.fraction)
    else:
        prof = ensemble_aggregate(traces, args.mode, window=args.window, amplitude_floor=args.floor,
                                  window_fraction=args.fraction).mean_kappa
    fio.write_kappa(args.output, prof)
    print(args.output)


def _cmd_compare(args):
    band = tuple(args.band) if args.band else None
    rep = compare_dirs(args.nn_dir, args.fem_dir, band)
    out = args.output or os.path.join(args.nn_dir, "comparison.csv")
    csv_path, summary = fio.write_comparison(out, rep)
    print(f"time_scale = {fio.fmt(rep.time_scale)}")
    print(f"spearman = {fio.fmt(rep.spearman)}")
    print(f"max_rel_l2 = {fio.fmt(rep.distances.max())}")
    print(csv_path)


def _cmd_plot(args):
    print(make_plots(args.result_dir))


def build_parser():
    p = argparse.ArgumentParser(prog="freqbias", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train ensembles (and FEM) for a config")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="output directory (overrides the config)")
    r.add_argument("-j", "--workers", type=int, default=None,
                   help="worker threads (default: $FREQBIAS_WORKERS or all cores)")
    r.set_defaults(func=_cmd_run)

    f = sub.add_parser("fem", help="FEM evolution only")
    f.add_argument("config")
    f.add_argument("-o", "--output")
    f.set_defaults(func=_cmd_fem)

    k = sub.add_parser("kappa", help="learning-rate profile from trace CSVs")
    k.add_argument("traces", nargs="+")
    k.add_argument("-o", "--output", default="kappa.csv")
    k.add_argument("--window", type=int, default=None, help="snapshots in the fit (default: first 10%% of time)")
    k.add_argument("--fraction", type=float, default=0.1)
    k.add_argument("--floor", type=float, default=1e-8, help="amplitude floor")
    k.add_argument("--mode", choices=("per-seed", "mean-spectrum"), default="per-seed")
    k.set_defaults(func=_cmd_kappa)

    c = sub.add_parser("compare", help="NN ensemble vs FEM trace")
    c.add_argument("nn_dir")
    c.add_argument("fem_dir")
    c.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"))
    c.add_argument("-o", "--output")
    c.set_defaults(func=_cmd_compare)

    pl = sub.add_parser("plot", help="redraw figures of a result directory")
    pl.add_argument("result_dir")
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "workers", None) is None and args.command == "run":
            args.workers = default_workers()
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentFailure as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
