"""Command-line scenario runner.

Subcommands mirror the scenario kinds::

    aqec prepare --config cfg.ini [--out BASE] [--cutoff-override D]
                 [--threads N] [--no-plot]
    aqec protect | scan | leakage | decompose-check | depth-theory ...

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .config import KINDS, parse_config
from .errors import AqecError, ConfigError
from .scenarios import run_scenario, write_outputs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqec",
        description="Dissipative bosonic-state stabilization scenarios")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        cmd = sub.add_parser(kind, help=f"run a {kind} scenario")
        cmd.add_argument("--config", required=True, help="INI scenario config")
        cmd.add_argument("--out", default=None,
                         help="output base path (overrides the config)")
        cmd.add_argument("--cutoff-override", type=int, default=None,
                         help="replace the configured Fock cutoff")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads for grid cells")
        cmd.add_argument("--no-plot", action="store_true",
                         help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(
                f"{args.config}: [scenario] kind = {cfg.kind!r} does not "
                f"match subcommand {args.command!r}")
        if args.cutoff_override is not None:
            if args.cutoff_override < 4:
                raise ConfigError("--cutoff-override must be >= 4")
            cfg = dataclasses.replace(cfg, cutoff=args.cutoff_override)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run_scenario(cfg, threads=max(1, args.threads))
        written = write_outputs(result, plot=not args.no_plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AqecError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
