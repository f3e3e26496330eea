"""Command-line experiment runner.

Subcommands: converge-propagation, converge-filter, compare-filters,
lemma-checks. Results go to CSV (header mandatory, provenance in leading
comment lines) with an optional JSON mirror. Exit codes: 0 success,
1 validation error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import load_config
from .errors import ProxflowError, ValidationError
from .experiments import compare_filters, converge_filter, converge_propagation, lemma_checks

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("PROXFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"PROXFLOW_THREADS must be an integer, got {env!r}") from exc
    return 1


def _parse_dims(text: str):
    if "-" in text:
        lo, hi = text.split("-", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(d) for d in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxflow",
        description="Proximal-recursion propagation and filtering experiments",
    )
    parser.add_argument("--version", action="version", version=f"proxflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="CSV output path (overrides the config)")
        p.add_argument("--out-json", default=None, help="optional JSON mirror path")
        p.add_argument("--seed", type=int, default=None, help="override the seed list")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads for independent cells (PROXFLOW_THREADS fallback)",
        )

    add_common(sub.add_parser("converge-propagation", help="propagation order study"))
    add_common(sub.add_parser("converge-filter", help="filter order study vs reference run"))
    add_common(sub.add_parser("compare-filters", help="Monte Carlo filter comparison"))

    lemma = sub.add_parser("lemma-checks", help="randomized geometry identity report")
    lemma.add_argument("--trials", type=int, default=1000)
    lemma.add_argument("--dims", type=_parse_dims, default=(1, 2, 3, 4, 5),
                       help="dimensions, e.g. '1-5' or '1,3,4'")
    lemma.add_argument("--seed", type=int, default=0)
    lemma.add_argument("--out", default=None, help="CSV output path")
    lemma.add_argument("--out-json", default=None)
    lemma.add_argument("--threads", type=int, default=None)
    return parser


def _run_config_command(args, runner):
    cfg = load_config(args.config)
    if args.seed is not None:
        object.__setattr__(cfg, "seeds", (args.seed,))
    table = runner(cfg, threads=_threads(args))
    csv_path = args.out or cfg.out_csv
    json_path = args.out_json or cfg.out_json
    if not csv_path:
        raise ValidationError("no output path: pass --out or set output.csv in the config")
    table.write(csv_path, json_path)
    print(f"wrote {len(table.rows)} rows to {csv_path} (config {table.config_hash[:12]})")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "converge-propagation":
            _run_config_command(args, converge_propagation)
        elif args.command == "converge-filter":
            _run_config_command(args, converge_filter)
        elif args.command == "compare-filters":
            _run_config_command(args, compare_filters)
        elif args.command == "lemma-checks":
            table = lemma_checks(args.trials, args.dims, args.seed)
            if args.out:
                table.write(args.out, args.out_json)
                print(f"wrote {len(table.rows)} rows to {args.out}")
            else:
                sys.stdout.write(table.to_csv())
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProxflowError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
