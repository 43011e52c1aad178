"""Command-line entry point: ``tamed-ns <subcommand>``.

Exit codes: 0 success, 2 configuration error, 3 blow-up, 4 check failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import io
from .config import parse_config
from .errors import BlowUpError, ConfigurationError
from .experiments import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    config_for_checkpoint,
    resume_state,
    run_experiment,
)
from .taming import TamingProfile, check_table


def _common(p):
    p.add_argument("-c", "--config", help="key-value config file")
    p.add_argument(
        "-s", "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key (repeatable; wins over the file)",
    )
    p.add_argument("-o", "--out", help="output directory (same as --set output.dir=...)")
    p.add_argument("-j", "--workers", type=int, help="concurrent runs for sweeps")


def build_parser():
    parser = argparse.ArgumentParser(prog="tamed-ns", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single simulation")
    _common(p)
    p.add_argument("--resume", metavar="CHECKPOINT", help="continue from a checkpoint")

    p = sub.add_parser("sweep-taming", help="runs over experiment.N_list plus an untamed reference")
    _common(p)
    p.add_argument("--N-list", help="comma-separated taming levels")

    p = sub.add_parser("sweep-resolution", help="runs over experiment.M_list")
    _common(p)
    p.add_argument("--M-list", help="comma-separated grid sizes")

    p = sub.add_parser("compare", help="tamed vs untamed on the same scenario")
    _common(p)

    p = sub.add_parser("resume", help="continue a run from a checkpoint")
    p.add_argument("checkpoint")
    _common(p)

    p = sub.add_parser("check-gn", help="CSV of r, g, g', lower-bound slack")
    p.add_argument("--N", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=None, help="default N + 3")
    p.add_argument("--count", type=int, default=101)
    p.add_argument("--output", help="file to write (stdout if omitted)")
    return parser


KIND_BY_COMMAND = {
    "run": "single",
    "resume": "single",
    "sweep-taming": "sweep_taming",
    "sweep-resolution": "sweep_resolution",
    "compare": "compare",
}


def _overrides(args):
    sets = [f"experiment.kind = {KIND_BY_COMMAND[args.command]}"]
    sets += list(args.set)
    if args.out:
        sets.append(f"output.dir = {args.out}")
    if args.workers:
        sets.append(f"experiment.workers = {args.workers}")
    if getattr(args, "N_list", None):
        sets.append(f"experiment.N_list = [{args.N_list}]")
    if getattr(args, "M_list", None):
        sets.append(f"experiment.M_list = [{args.M_list}]")
    return sets


def _check_gn(args):
    profile = TamingProfile(N=args.N, nu=args.nu)
    r_max = args.N + 3.0 if args.r_max is None else args.r_max
    if args.r_min < 0 or r_max < args.r_min or args.count < 2:
        raise ConfigurationError("need 0 <= r-min <= r-max and count >= 2")
    rows = check_table(args.r_min, r_max, args.count, profile)
    lines = ["r,g,g_prime,lower_bound_slack"]
    lines += [",".join(io.fmt_float(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "check-gn":
            return _check_gn(args)
        cfg = parse_config(args.config, _overrides(args))
        checkpoint = args.checkpoint if args.command == "resume" else getattr(args, "resume", None)
        initial = None
        if checkpoint:
            header, initial = resume_state(checkpoint)
            cfg = config_for_checkpoint(cfg, header)
        return run_experiment(cfg, initial=initial)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
