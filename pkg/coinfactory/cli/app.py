"""The `coinfactory` command line: analyze, simulate, verify, sweep and selftest.

Exit codes: 0 when every statistical gate passes, 1 when a gate fails, 2 on
usage errors (unknown flags, malformed expressions, invalid parameters).

The seed is taken from --seed, else from SEED in the --config file, else
from the FACTORY_SEED environment variable, else the built-in default.
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Callable
from typing import Optional

import pandas as pd
from pydantic import ValidationError

from coinfactory.analysis.evaluate import cramer_rao_from_values
from coinfactory.analysis.evaluate import elasticity
from coinfactory.analysis.evaluate import eval_f
from coinfactory.analysis.evaluate import eval_f_prime
from coinfactory.analysis.evaluate import expected_inputs_alg1
from coinfactory.analysis.evaluate import expected_inputs_alg2
from coinfactory.cli.expression import build_series
from coinfactory.cli.expression import parse_expression
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.harness.models.experiment import ExperimentSpec
from coinfactory.harness.models.experiment import Statistic
from coinfactory.harness.models.experiment import parse_p_grid
from coinfactory.harness.models.report import VerifyReport
from coinfactory.harness.runner import run
from coinfactory.harness.selftest import SELFTEST_REPLICATIONS
from coinfactory.harness.selftest import run_selftest
from coinfactory.harness.sweep import DEFAULT_ENTRIES
from coinfactory.harness.sweep import sweep_optimality
from coinfactory.harness.verify import check_joint_law
from coinfactory.utils.errors import ExpressionSyntaxError
from coinfactory.utils.errors import FactoryError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

EXIT_OK = 0
EXIT_GATE_FAILED = 1
EXIT_USAGE = 2

SWEEP_GRID = "geom:0.25,0.0009765625,9"
ANALYZE_GRID = ",".join(f"{0.05 * i:.2f}" for i in range(1, 20))


class UsageError(Exception):
    pass


def _experiment_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("expression", nargs="?", help="Factory expression, see docs/grammar.md.")
    flags.add_argument("--config", type=Path, help="KEY=VALUE experiment file.")
    flags.add_argument("--p", dest="p_grid", help='Comma list of probabilities or "geom:start,stop,points".')
    flags.add_argument("--reps", type=int, dest="replications", help="Replications per grid point.")
    flags.add_argument("--seed", type=int, help="Root seed (overrides SEED and FACTORY_SEED).")
    flags.add_argument("--algo", dest="algorithm", choices=[algorithm.value for algorithm in Algorithm])
    flags.add_argument(
        "--nonrandomized",
        action="store_const",
        const=Algorithm.NONRANDOMIZED.value,
        dest="algorithm",
        help="Same as --algo nonrand.",
    )
    flags.add_argument("--digit-ceiling", type=int, dest="digit_ceiling", help="Digit resolution limit (bits).")
    flags.add_argument("--dyadic-shortcut", action="store_true", default=None, dest="dyadic_shortcut")
    flags.add_argument("--max-inputs", type=int, dest="max_inputs", help="Cap on L for the baseline.")
    flags.add_argument("--confidence", type=float, help="Confidence level of the intervals (default 0.9999).")
    flags.add_argument("--workers", type=int, help="Worker processes.")
    return flags


def _output_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--out", type=Path, help="Write the table here instead of stdout.")
    flags.add_argument("--format", choices=["csv", "json"], default="csv")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coinfactory", description="Exact Bernoulli factories and their verification.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    experiment, output = _experiment_flags(), _output_flags()

    analyze = subparsers.add_parser("analyze", parents=[output], help="f, f', E[N] and the lower bound over a grid.")
    analyze.add_argument("expression", help="Series expression.")
    analyze.add_argument("--p", dest="p_grid", default=ANALYZE_GRID)
    analyze.add_argument("--tol", type=float, default=1e-9, help="Absolute evaluation tolerance.")

    subparsers.add_parser("simulate", parents=[experiment, output], help="Monte Carlo run with gates.")
    subparsers.add_parser("verify", parents=[experiment, output], help="Run plus the joint stopping law test.")

    sweep = subparsers.add_parser("sweep", parents=[output], help="E[N] p / f(p) across a geometric grid.")
    sweep.add_argument("entries", nargs="*", default=list(DEFAULT_ENTRIES), help="Series expressions.")
    sweep.add_argument("--p", dest="p_grid", default=SWEEP_GRID)
    sweep.add_argument("--reps", type=int, dest="replications", default=100_000)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--confidence", type=float)
    sweep.add_argument("--workers", type=int)

    selftest = subparsers.add_parser("selftest", parents=[output], help="Reduced-scale invariant suite.")
    selftest.add_argument("--reps", type=int, dest="replications", default=SELFTEST_REPLICATIONS)
    selftest.add_argument("--seed", type=int)
    selftest.add_argument("--module", action="append", dest="modules", help="Restrict to a module (repeatable).")
    return parser


def _emit(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        logger.info(f"Wrote {out}")


def _frame_text(frame: pd.DataFrame, output_format: str) -> str:
    if output_format == "json":
        return frame.to_json(orient="records", indent=2, double_precision=15) + "\n"
    return frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")


def experiment_from_args(args: argparse.Namespace, outputs: Optional[list[Statistic]] = None) -> ExperimentSpec:
    """Build the experiment of `simulate`/`verify` from flags and an optional config file."""
    overrides = {
        "expression": args.expression,
        "p_grid": parse_p_grid(args.p_grid) if args.p_grid else None,
        "replications": args.replications,
        "seed": args.seed,
        "algorithm": args.algorithm,
        "digit_ceiling": args.digit_ceiling,
        "dyadic_shortcut": args.dyadic_shortcut,
        "max_inputs": args.max_inputs,
        "confidence": args.confidence,
        "workers": args.workers,
        "outputs": outputs,
    }
    if args.config is not None:
        return ExperimentSpec.from_config(args.config, **overrides)
    missing = [flag for flag, name in (("EXPRESSION", "expression"), ("--p", "p_grid"), ("--reps", "replications")) if overrides[name] is None]
    if missing:
        raise UsageError(f"Missing {', '.join(missing)} (or pass --config)")
    return ExperimentSpec.model_validate({name: value for name, value in overrides.items() if value is not None})


def _value_or_nan(compute: Callable[[], float]) -> float:
    try:
        return compute()
    except (FactoryError, ValueError, ArithmeticError):
        return math.nan


def analyze_table(expression: str, p_grid: list[float], tol: float = 1e-9) -> pd.DataFrame:
    """f, f', E[N] of both samplers and the sequential lower bound, one row per p."""
    series = build_series(expression)
    rows = []
    for p in p_grid:
        f = eval_f(series, p, tol)
        f_prime = eval_f_prime(series, p, tol)
        rows.append(
            {
                "expression": series.name,
                "p": p,
                "f": f.value,
                "f_error": f.error_bound,
                "f_prime": f_prime.value,
                "f_prime_error": f_prime.error_bound,
                "expected_n_rand": expected_inputs_alg1(series, p, tol).value,
                "expected_n_nonrand": expected_inputs_alg2(series, p, tol).value,
                "cramer_rao": _value_or_nan(lambda: cramer_rao_from_values(f, f_prime, p).value),
                "elasticity": _value_or_nan(lambda: elasticity(series, p, tol).value),
            },
        )
    return pd.DataFrame(rows)


def command_analyze(args: argparse.Namespace) -> int:
    table = analyze_table(args.expression, parse_p_grid(args.p_grid), args.tol)
    _emit(_frame_text(table, args.format), args.out)
    return EXIT_OK


def command_simulate(args: argparse.Namespace) -> int:
    report = run(experiment_from_args(args))
    _emit(report.to_json() if args.format == "json" else report.to_csv(), args.out)
    return EXIT_OK if report.passed else EXIT_GATE_FAILED


def command_verify(args: argparse.Namespace) -> int:
    spec = experiment_from_args(args, outputs=list(Statistic))
    node = parse_expression(spec.expression)
    if not node.is_series or spec.algorithm != Algorithm.RANDOMIZED:
        raise UsageError("verify tests the joint law of a series expression under --algo rand")
    report = run(spec)
    series = build_series(node)
    verified = VerifyReport(report=report, joint_law=[check_joint_law(report, series, point.p) for point in report.points])
    _emit(verified.to_json() if args.format == "json" else verified.to_csv(), args.out)
    return EXIT_OK if verified.passed else EXIT_GATE_FAILED


def command_sweep(args: argparse.Namespace) -> int:
    report = sweep_optimality(
        args.entries,
        parse_p_grid(args.p_grid),
        args.replications,
        seed=args.seed,
        confidence=args.confidence,
        workers=args.workers,
    )
    _emit(report.to_json() if args.format == "json" else report.to_csv(), args.out)
    return EXIT_OK if report.passed else EXIT_GATE_FAILED


def command_selftest(args: argparse.Namespace) -> int:
    report = run_selftest(replications=args.replications, seed=args.seed, modules=args.modules)
    text = report.model_dump_json(indent=2) + "\n" if args.format == "json" else _frame_text(report.to_frame(), "csv")
    _emit(text, args.out)
    return EXIT_OK if report.passed else EXIT_GATE_FAILED


COMMANDS = {
    "analyze": command_analyze,
    "simulate": command_simulate,
    "verify": command_verify,
    "sweep": command_sweep,
    "selftest": command_selftest,
}


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point of the `coinfactory` console script."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as parse_exit:
        return int(parse_exit.code or 0)

    try:
        return COMMANDS[args.command](args)
    except ExpressionSyntaxError as syntax_exception:
        logger.error(f"Invalid expression: {syntax_exception}")
        return EXIT_USAGE
    except (UsageError, ValidationError, FileNotFoundError) as usage_exception:
        logger.error(str(usage_exception))
        return EXIT_USAGE
    except (FactoryError, ValueError) as run_exception:
        logger.error(f"{args.command} aborted: {run_exception}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
