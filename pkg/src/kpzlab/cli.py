"""``kpzlab <subcommand> --config <path> [--seed S] [--out DIR]``.

Exit status: 0 when every verdict passes, 1 when any fails, 2 for usage,
configuration or resource errors.
"""
from __future__ import annotations

import argparse
import sys

from . import _backend
from .growth import ContractViolation
from .harness import (
    ConfigError,
    ExperimentConfig,
    InfeasibleError,
    ReportWriteError,
    run_experiment,
    summarize_report,
    write_report,
)
from .noise import DomainError, UnsupportedError

SUBCOMMANDS = {
    "kernels": ("kernels", "local_time_scan"),
    "simulate": ("simulate",),
    "polymer": ("polymer", "bound_scan"),
    "renorm": ("renorm_mean",),
    "compare": ("invariance",),
    "she": ("she_compare",),
}

HELP = {
    "kernels": "heat-kernel power sums, V, and local-time scans",
    "simulate": "evolve one interface field (x, t, f_raw, f_tilted)",
    "polymer": "evolve one partition field or run the bound scans",
    "renorm": "Monte Carlo mean of the renormalization field Y",
    "compare": "two-sample KS invariance test against the polymer",
    "she": "half-space SHE oracle checks and sampling",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpzlab", description="Half-space KPZ lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", required=True, help="TOML or JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", default=None, help="output directory for CSV/JSON")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text",
                       help="summary printed to stdout")
        p.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        if args.backend != "auto":
            available = _backend.available()
            if args.backend not in available:
                raise ConfigError(f"backend {args.backend!r} is not available")
            _backend.use(args.backend)
        cfg = ExperimentConfig.load(args.config)
        if cfg.kind not in SUBCOMMANDS[args.command]:
            raise ConfigError(f"config kind {cfg.kind!r} does not belong to "
                              f"'{args.command}' (expected {SUBCOMMANDS[args.command]})")
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        report = run_experiment(cfg)
        if cfg.out_dir:
            write_report(report, cfg.out_dir)
    except (ConfigError, InfeasibleError, ContractViolation, DomainError, UnsupportedError,
            ReportWriteError) as exc:
        print(f"kpzlab: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(summarize_report(report, args.format))
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
