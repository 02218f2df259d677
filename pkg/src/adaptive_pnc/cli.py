"""Command-line front end.

Every subcommand writes CSV/JSON to ``--out`` (a file, or a directory for
``report``) or to stdout.  Seed precedence: ``--seed``, then ``PNC_SEED``,
then the config file, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiment as ex
from .bounds import BOUND_CSV_FIELDS, bound_rows
from .constellation import make_psk
from .netmap import InfeasibleMapError, catalog_to_json
from .quantizer import classify_grid, deltas_to_csv, estimate_all_deltas
from .schemes import full_library
from .singular import enumerate_singular_states, states_to_csv


def _float_list(text: str) -> tuple[float, ...]:
    """'0:45:2.5' (inclusive range) or '10,20,30'."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            n = int(round((hi - lo) / step)) + 1
            return tuple(float(round(lo + i * step, 9)) for i in range(n))
        return tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from e


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PNC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ex.ConfigError(f"PNC_SEED must be an integer, got {env!r}")
    return None


def _spec(args) -> ex.ExperimentSpec:
    if args.config and args.preset:
        raise ex.ConfigError("give either --config or --preset, not both")
    if args.config:
        spec = ex.ExperimentSpec.from_json(args.config)
    else:
        spec = ex.PRESETS[args.preset or "fig5"]
    overrides = dict(
        seed=_seed(args),
        M=getattr(args, "M", None),
        K=getattr(args, "K", None),
        snr_db=getattr(args, "snr", None),
        schemes=tuple(args.scheme) if getattr(args, "scheme", None) else None,
        trial_budget=getattr(args, "trials", None),
        target_errors=getattr(args, "target_errors", None),
        target_rate=getattr(args, "target_rate", None),
    )
    try:
        return ex.with_overrides(spec, **overrides)
    except TypeError as e:
        raise ex.ConfigError(str(e)) from e


def cmd_singular(args):
    _emit(states_to_csv(enumerate_singular_states(make_psk(args.M))), args.out)


def cmd_maps(args):
    lib = full_library(make_psk(args.M))
    _emit(catalog_to_json(list(lib.entries)) + "\n", args.out)


def cmd_quantize(args):
    lib = full_library(make_psk(args.M))
    r = classify_grid(lib, (-args.extent, args.extent), (-args.extent, args.extent), args.resolution)
    _emit(r.to_csv(), args.out)


def cmd_delta(args):
    lib = full_library(make_psk(args.M))
    est = estimate_all_deltas(lib, args.angular_samples, args.radius_tol)
    _emit(deltas_to_csv(est.values()), args.out)


def cmd_simulate(args):
    spec = _spec(args)
    sims = ex.simulate_schemes(spec, args.workers)
    rows = [r for s in spec.schemes for r in ex.sim_rows(s, sims[s])]
    _emit(ex.write_csv(ex.SIM_CSV_FIELDS, rows), args.out)


def cmd_bounds(args):
    spec = _spec(args)
    reports = ex.bound_reports(spec)
    rows = [r for s in spec.schemes for r in bound_rows(reports[s])]
    _emit(ex.write_csv(BOUND_CSV_FIELDS, rows), args.out)


def cmd_report(args):
    spec = _spec(args)
    if args.from_csv:
        curves = ex.read_sim_csv(Path(args.from_csv).read_text())
        if not curves:
            raise ex.ConfigError(f"no simulation rows in {args.from_csv}")
        _emit(json.dumps(ex.summarize(spec, curves), indent=1, sort_keys=True) + "\n", args.out)
        return
    if args.out:
        spec = ex.with_overrides(spec, out_dir=args.out)
    written = ex.run_experiment(spec, args.workers)
    for name in sorted(written):
        print(written[name])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptive-pnc", description="Adaptive network coding for two-way relaying.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, experiment=False):
        sp.add_argument("--out", help="output file (directory for report); stdout if omitted")
        sp.add_argument("--seed", type=int)
        if experiment:
            sp.add_argument("--config", help="experiment config JSON")
            sp.add_argument("--preset", choices=sorted(ex.PRESETS))
            sp.add_argument("--M", type=int)
            sp.add_argument("--K", type=float)
            sp.add_argument("--snr", type=_float_list, help="dB grid: 'lo:hi:step' or comma list")
            sp.add_argument("--scheme", action="append", help="repeatable; default from config")
            sp.add_argument("--trials", type=int, help="trial budget per SNR point")
            sp.add_argument("--target-errors", type=int)
            sp.add_argument("--target-rate", type=float)
            sp.add_argument("--workers", type=int, default=1)
        else:
            sp.add_argument("--M", type=int, default=4)

    sp = sub.add_parser("singular", help="singular fade states and dominance factors (CSV)")
    common(sp)
    sp.set_defaults(func=cmd_singular)

    sp = sub.add_parser("maps", help="map catalog removing each singular state (JSON)")
    common(sp)
    sp.set_defaults(func=cmd_maps)

    sp = sub.add_parser("quantize", help="map id over a fade-state grid (CSV)")
    common(sp)
    sp.add_argument("--resolution", type=int, default=501)
    sp.add_argument("--extent", type=float, default=2.5)
    sp.set_defaults(func=cmd_quantize)

    sp = sub.add_parser("delta", help="enclosed-circle radius per singular state (CSV)")
    common(sp)
    sp.add_argument("--angular-samples", type=int, default=360)
    sp.add_argument("--radius-tol", type=float, default=1e-3)
    sp.set_defaults(func=cmd_delta)

    sp = sub.add_parser("simulate", help="Monte Carlo end-to-end SER (CSV)")
    common(sp, experiment=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bounds", help="end-to-end union bound (CSV)")
    common(sp, experiment=True)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("report", help="full sweep with gains and slopes, or summarize an existing CSV")
    common(sp, experiment=True)
    sp.add_argument("--from-csv", help="summarize this simulate CSV instead of running")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ex.ConfigError, InfeasibleMapError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
