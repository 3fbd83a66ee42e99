"""Command line: ``ztescape rate | sweep | check``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .config import (EXIT_OK, EXIT_PARSE, ConfigError, ConfigParseError, ExperimentConfig,
                     load_config, parse_value)
from .report import run_point, run_sweep

log = logging.getLogger("ztescape")

# flag -> config key
_FLAG_KEYS = {"ys": "ys", "gamma": "gamma", "methods": "methods", "seed": "seed", "out": "out",
              "ntraj": "ntraj", "grid_cells": "grid_cells", "cutoff": "cutoff"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ztescape", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"rate": "evaluate the rate methods at one (ys, gamma) point",
             "sweep": "evaluate along a ys or gamma axis given as a comma-separated list",
             "check": "validate the configuration and echo it with defaults applied"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--ys", help="barrier height eps_s/eps0 (list for a sweep)")
        p.add_argument("--gamma", help="damping gamma/Omega0 (list for a sweep)")
        p.add_argument("--methods", help="comma-separated method tags, or 'all' for the deterministic set")
        p.add_argument("--seed", help="Monte Carlo seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--ntraj", help="Monte Carlo trajectory count")
        p.add_argument("--grid-cells", dest="grid_cells", help="finite-volume cells")
        p.add_argument("--cutoff", help="noise cutoff omega_c/Omega0")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {}
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = parse_value(key, value)
    return load_config(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "check":
            sys.stdout.write(cfg.echo())
            return EXIT_OK
        if args.command == "rate":
            if cfg.is_sweep:
                raise ConfigParseError("'rate' takes a single ys and gamma; use 'sweep' for lists")
            report = run_point(cfg)
            sys.stdout.write(report.rates_csv())
            for w in report.warnings:
                log.warning(w)
            for m, err in report.errors.items():
                print(f"error: {m}: {err}", file=sys.stderr)
            return report.exit_code
        result = run_sweep(cfg)
        print(f"{len(result.reports)} points, {len(result.rows)} rates written to {cfg.out}")
        if result.strictly_increasing is not None:
            print(f"activation/tunnel ratio strictly increasing in ys: {result.strictly_increasing}")
        return result.exit_code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
