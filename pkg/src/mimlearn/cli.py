"""Command-line interface: ``mimlearn <subcommand> --config PATH [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import BudgetExhaustedError, ConfigError, MimError
from .pipeline import compare_baseline, load_config, run_experiment, sweep

SUBCOMMANDS = {
    "learn-real": "real_mim",
    "learn-boolean": "boolean_mim",
    "learn-proper-ltf": "proper_ltf",
    "learn-proper-relu": "proper_relu",
    "compare-baseline": None,
    "sweep": None,
}

EXIT_CONFIG, EXIT_BUDGET, EXIT_OTHER = 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimlearn", description="Agnostic learning of multi-index models with queries.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory for report files")
        p.add_argument("--deterministic", action="store_true",
                       help="single-threaded, fixed-order execution; timings go to timings.json only")
        p.add_argument("--budget-queries", type=int, default=None, help="hard cap on label queries")
        p.add_argument("--budget-samples", type=int, default=None, help="hard cap on Gaussian samples")
        p.add_argument("--keep-artifacts", action="store_true",
                       help="also write the influence estimate and regression samples under OUT/artifacts")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (ignored with --deterministic)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_mode(data: dict, mode: str | None, command: str) -> dict:
    if mode is None:
        return data
    if "mode" in data and data["mode"] != mode:
        raise ConfigError(f"config mode {data['mode']!r} does not match subcommand {command!r}", ("mode",))
    return {**data, "mode": mode}


def _summary(report) -> dict:
    return {"mode": report.mode, "d": report.d, "dimV": report.dim_v, "Nq": report.queries_used,
            "Ns": report.samples_used, "train_err": report.train_error, "test_err": report.test_error,
            "opt_ub": report.opt_ub, "excess": report.excess}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        data = _apply_mode(load_config(args.config), SUBCOMMANDS[args.command], args.command)
        if args.workers > 1 and not args.deterministic:
            data["workers"] = args.workers
        if args.command == "sweep":
            reports = sweep(data, args.out, args.deterministic, 1 if args.deterministic else args.workers)
            out = [_summary(r) for r in reports]
        elif args.command == "compare-baseline":
            ours, base = compare_baseline(data, args.out, args.seed, args.deterministic)
            out = {"query_pipeline": _summary(ours), "baseline": _summary(base)}
        else:
            report = run_experiment(data, args.out, args.seed, args.deterministic, args.budget_queries,
                                    args.budget_samples, args.keep_artifacts)
            out = _summary(report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExhaustedError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (MimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    print(json.dumps(out, indent=2))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
