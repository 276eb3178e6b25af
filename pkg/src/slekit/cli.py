"""Command-line front end.

Subcommands: analyze (mask manifest -> report), synth (seeded synthetic
data: brownian | sle | pareto | gaussian), selfcheck (analytic release
gate). All outputs are static files; identical arguments and seeds give
identical bytes.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DataError,
    InputError,
    InsufficientDataError,
    NumericalError,
)
from .loewner import forward_solve
from .pipeline import MODES, RunConfig, analyze
from .selfcheck import run_selfcheck
from .synth import (
    RandomSource,
    brownian_driving,
    gaussian_samples,
    pareto_samples,
)
from .masks import CHANNELS

OUTPUT_DIR_ENV = "SLEKIT_OUTPUT_DIR"

EXIT_CODES = (
    (InputError, 2, "invalid input or configuration"),
    (DataError, 3, "malformed or inconsistent data"),
    (InsufficientDataError, 4, "not enough data for the request"),
    (NumericalError, 5, "numerical failure"),
)

_EPILOG = f"""exit codes:
  0  success
  1  unexpected internal error
  2  invalid input or configuration (also I/O and argument errors)
  3  malformed or inconsistent data
  4  not enough data for the request
  5  numerical failure

environment:
  {OUTPUT_DIR_ENV}  overrides the analyze output directory
"""


def _exit_code(exc: BaseException) -> int:
    for base, code, _ in EXIT_CODES:
        if isinstance(exc, base):
            return code
    if isinstance(exc, (OSError, ValueError, json.JSONDecodeError)):
        return 2
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="slekit", epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Loewner-driving reconstruction and diagnostics for "
                    "time-resolved binary masks.")
    p.add_argument("--version", action="version", version=f"slekit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="run the mask -> report pipeline",
                        epilog=_EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    pa.add_argument("--config", help="JSON file holding a full run config")
    pa.add_argument("--manifest", help="mask-sequence manifest JSON")
    pa.add_argument("--output-dir", help="artifact directory (must be empty)")
    pa.add_argument("--channel", choices=CHANNELS)
    pa.add_argument("--nx", type=int)
    pa.add_argument("--ny", type=int)
    pa.add_argument("--subsample-threshold", type=int)
    pa.add_argument("--welch-segment-length", type=int)
    pa.add_argument("--welch-overlap", type=float)
    pa.add_argument("--welch-taper", choices=("hann", "hamming", "boxcar"))
    pa.add_argument("--hill-n0", type=int)
    pa.add_argument("--fit-range", nargs=2, type=float, metavar=("LO", "HI"))
    pa.add_argument("--n-time-bins", type=int)
    pa.add_argument("--max-acf-lag", type=int)
    pa.add_argument("--mode", choices=MODES)
    pa.add_argument("--workers", type=int)
    pa.add_argument("--fixed-clock", action="store_true", default=None,
                    help="pin the report timestamp for byte-identical output")

    ps = sub.add_parser("synth", help="seeded synthetic data generators")
    ss = ps.add_subparsers(dest="generator", required=True)

    def common(q, time_steps=True):
        q.add_argument("--seed", type=int, required=True)
        q.add_argument("--out", required=True, help="output file (CSV)")
        if time_steps:
            q.add_argument("--time", type=float, default=1.0,
                           help="total capacity time")
            q.add_argument("--steps", type=int, default=1000)

    qb = ss.add_parser("brownian", help="Brownian driving function CSV")
    qb.add_argument("--kappa", type=float, required=True)
    common(qb)

    qs = ss.add_parser("sle", help="SLE trace CSV (re, im)")
    qs.add_argument("--kappa", type=float, required=True)
    qs.add_argument("--samples-per-step", type=int, default=1)
    common(qs)

    qp = ss.add_parser("pareto", help="heavy-tailed sample CSV")
    qp.add_argument("--alpha", type=float, required=True)
    qp.add_argument("--count", type=int, default=100_000)
    common(qp, time_steps=False)

    qg = ss.add_parser("gaussian", help="gaussian sample CSV")
    qg.add_argument("--sigma", type=float, default=1.0)
    qg.add_argument("--count", type=int, default=100_000)
    common(qg, time_steps=False)

    pc = sub.add_parser("selfcheck", help="run the analytic release gate")
    pc.add_argument("--perturb", action="store_true",
                    help="negative-control hook: corrupt the elementary map "
                         "check so the gate must fail")
    return p


def _config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise ValueError("--config must hold a JSON object")
    overrides = {
        "manifest": args.manifest,
        "output_dir": args.output_dir,
        "channel": args.channel,
        "nx": args.nx,
        "ny": args.ny,
        "subsample_threshold": args.subsample_threshold,
        "welch_segment_length": args.welch_segment_length,
        "welch_overlap": args.welch_overlap,
        "welch_taper": args.welch_taper,
        "hill_n0": args.hill_n0,
        "fit_range": tuple(args.fit_range) if args.fit_range else None,
        "n_time_bins": args.n_time_bins,
        "max_acf_lag": args.max_acf_lag,
        "mode": args.mode,
        "workers": args.workers,
        "fixed_clock": args.fixed_clock,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        base["output_dir"] = env_out
    if "manifest" not in base:
        raise ValueError("analyze needs --manifest (or a config providing it)")
    if "output_dir" not in base:
        raise ValueError(f"analyze needs --output-dir, {OUTPUT_DIR_ENV}, "
                         "or a config providing output_dir")
    return RunConfig.from_dict(base)


def _write_samples(path, values: np.ndarray) -> None:
    np.savetxt(path, values, fmt="%.17g", header="value", comments="")


def _run_synth(args) -> int:
    src = RandomSource(args.seed)
    out = Path(args.out)
    if args.generator == "brownian":
        u = brownian_driving(args.kappa, args.time, args.steps, src)
        u.to_csv(out)
    elif args.generator == "sle":
        u = brownian_driving(args.kappa, args.time, args.steps, src)
        trace = forward_solve(u, samples_per_step=args.samples_per_step)
        trace.to_csv(out)
        u.to_csv(out.with_name(out.stem + "_driver" + out.suffix))
    elif args.generator == "pareto":
        _write_samples(out, pareto_samples(args.alpha, args.count, src))
    else:
        _write_samples(out, gaussian_samples(args.sigma, args.count, src))
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            cfg = _config_from_args(args)
            report_path = analyze(cfg)
            print(f"report: {report_path}")
            return 0
        if args.command == "synth":
            return _run_synth(args)
        failures = run_selfcheck(perturb=args.perturb)
        return 1 if failures else 0
    except BaseException as exc:
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        stage = getattr(exc, "failed_stage", None)
        where = f" at stage '{stage}'" if stage else ""
        print(f"error{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
