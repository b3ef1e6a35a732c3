"""Command-line entry points: ``test-one``, ``test-two``, ``batch`` and ``simulate``.

Exit status is 0 when the command ran, 1 on usage or I/O errors and 2 when
the data are statistically degenerate (e.g. a zero-variance coordinate on a
studentized path).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .engine import TestSpec, run_one_sample, run_two_sample
from .errors import DegenerateVarianceError, InvalidInputError
from .io import (
    DEFAULT_FDR,
    DEFAULT_MIN_SET_SIZE,
    emit_report,
    load_matrix,
    load_scenarios,
    load_sets,
    load_vector,
    render_report,
    run_batch,
)
from .montecarlo import RngSpec
from .simulation import run_scenario

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2
BATCH_DRAWS = 50000
DEFAULT_DRAWS = 1500


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for degeneracy here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, tests: bool = True):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="root seed (default 0)")
    if not tests:
        return
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mc-draws", type=int, default=None, dest="mc_draws",
                   help=f"Monte Carlo draws M (default {DEFAULT_DRAWS}; {BATCH_DRAWS} for batch)")
    p.add_argument("--studentized", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--screen", action=argparse.BooleanOptionalAction, default=False)


def _two_inputs(p: argparse.ArgumentParser):
    p.add_argument("x", help="CSV for group X, or a single CSV with --group-column")
    p.add_argument("y", nargs="?", help="CSV for group Y")
    p.add_argument("--group-column", dest="group_column")
    p.add_argument("--groups", help="comma-separated labels X,Y selecting the two groups")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdmeans", description="Simulation-calibrated max-type tests for high-dimensional means.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    one = sub.add_parser("test-one", help="one-sample test of H0: mu = mu0")
    one.add_argument("data", help="CSV, header row of feature names, one observation per row")
    one.add_argument("--mu0", help="file with the p hypothesized means (default: zero)")
    _common(one)

    two = sub.add_parser("test-two", help="two-sample test of H0: mu_x = mu_y")
    _two_inputs(two)
    _common(two)

    batch = sub.add_parser("batch", help="two-sample test per feature set with BH across sets")
    _two_inputs(batch)
    batch.add_argument("--sets", required=True, help="feature-set definitions (.json or .gmt)")
    batch.add_argument("--fdr", type=float, default=DEFAULT_FDR)
    batch.add_argument("--min-set-size", type=int, default=DEFAULT_MIN_SET_SIZE, dest="min_set_size")
    _common(batch)

    sim = sub.add_parser("simulate", help="run size/power scenarios from a JSON config")
    sim.add_argument("config")
    sim.add_argument("--emit-plot-data", dest="plot_data", help="also write a flat CSV of rates for plotting")
    _common(sim, tests=False)
    return parser


def _spec(args, family: str, default_draws: int, mu0=None) -> TestSpec:
    return TestSpec(
        family=family,
        studentized=args.studentized,
        screened=args.screen,
        alpha=args.alpha,
        M=args.mc_draws if args.mc_draws is not None else default_draws,
        rng=RngSpec(args.seed or 0),
        mu0=mu0,
        workers=args.workers,
    )


def _load_pair(args):
    if args.group_column:
        if args.y:
            raise UsageError("give either two files or --group-column, not both")
        groups = load_matrix(args.x, group_column=args.group_column)
        if args.groups:
            labels = [g.strip() for g in args.groups.split(",")]
            if len(labels) != 2:
                raise UsageError("--groups needs exactly two labels")
            missing = [g for g in labels if g not in groups]
            if missing:
                raise UsageError(f"no rows with group label(s): {', '.join(missing)}")
        else:
            if len(groups) != 2:
                raise UsageError(f"found {len(groups)} group labels; choose two with --groups")
            labels = list(groups)
        return groups[labels[0]], groups[labels[1]]
    if not args.y:
        raise UsageError("two-sample commands need a second CSV or --group-column")
    x, y = load_matrix(args.x), load_matrix(args.y)
    if args.command == "test-two" and x.feature_names != y.feature_names:
        raise UsageError("the two CSV files have different header rows")
    return x, y


def _run(args) -> str:
    if args.command == "test-one":
        data = load_matrix(args.data)
        mu0 = load_vector(args.mu0) if args.mu0 else None
        result = run_one_sample(data, _spec(args, "one_sample", DEFAULT_DRAWS, mu0))
        return emit_report(result, args.out, args.format)
    if args.command == "test-two":
        x, y = _load_pair(args)
        result = run_two_sample(x, y, _spec(args, "two_sample", DEFAULT_DRAWS))
        return emit_report(result, args.out, args.format)
    if args.command == "batch":
        x, y = _load_pair(args)
        sets = load_sets(args.sets)
        report = run_batch(x, y, sets, _spec(args, "two_sample", BATCH_DRAWS),
                           fdr_q=args.fdr, min_set_size=args.min_set_size, workers=args.workers)
        return emit_report(report, args.out, args.format)
    scenarios = load_scenarios(args.config)
    if args.seed is not None:
        scenarios = [replace(sc, seed=args.seed) for sc in scenarios]
    reports = [run_scenario(sc, workers=args.workers) for sc in scenarios]
    if args.plot_data:
        emit_report(reports, args.plot_data, "csv")
    return emit_report(reports, args.out, args.format)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 < getattr(args, "fdr", 0.5) < 1:
        parser.error("--fdr must lie in (0, 1)")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        text = _run(args)
    except DegenerateVarianceError as exc:
        print(f"hdmeans: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, InvalidInputError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"hdmeans: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


__all__ = ["build_parser", "main", "render_report"]

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
