"""Reduced-scale invariant suite covering every module, run by `coinfactory selftest`."""

import math
import time
from collections import Counter
from fractions import Fraction
from typing import Callable
from typing import Optional
from typing import Sequence

import numpy as np

from coinfactory.analysis.evaluate import cramer_rao_bound
from coinfactory.analysis.evaluate import eval_f
from coinfactory.analysis.evaluate import eval_f_prime
from coinfactory.analysis.evaluate import expected_inputs_alg1
from coinfactory.analysis.evaluate import expected_inputs_alg2
from coinfactory.cli.expression import build_series
from coinfactory.cli.expression import canonical
from coinfactory.factory.sources import SimulatedCoin
from coinfactory.harness import stats
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.harness.models.experiment import ExperimentSpec
from coinfactory.harness.models.report import SelftestCase
from coinfactory.harness.models.report import SelftestReport
from coinfactory.harness.runner import run
from coinfactory.harness.verify import check_joint_law
from coinfactory.harness.verify import compare_histograms
from coinfactory.harness.verify import compare_outputs
from coinfactory.nonrand.extractor import von_neumann_bit
from coinfactory.series.catalog import catalog
from coinfactory.series.combinators import compose
from coinfactory.series.interval import lower
from coinfactory.series.stopping import coefficients_from_stopping
from coinfactory.series.stopping import stopping_from_coefficients
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import ExpressionSyntaxError
from coinfactory.utils.errors import FactoryError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

SELFTEST_REPLICATIONS = 10_000
SELFTEST_BASELINE_CAP = 10_000
LAW_GRID = (0.1, 0.5, 0.9)
DOMINANCE_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
CATALOG_EXPRESSIONS = ("sqrt", "power:a=1/3", "mobius_sqrt", "log2_sqrt", "exp_sqrt", "entropy")

CheckResult = tuple[bool, str]
Check = Callable[[int, int], CheckResult]

_CHECKS: list[tuple[str, str, Check]] = []


def selftest_check(module: str):
    """Register a check of `module`; checks run in registration order."""

    def register(function: Check) -> Check:
        _CHECKS.append((module, function.__name__, function))
        return function

    return register


def _run(expression: str, p_grid: Sequence[float], replications: int, seed: int, **options):
    return run(ExperimentSpec(expression=expression, p_grid=list(p_grid), replications=replications, seed=seed, **options))


def _failed_gates(report) -> list[str]:
    return [
        f"{report.expression}@{point.p}:{name}"
        for point in report.points
        for name, passed in point.checks.items()
        if not passed
    ]


@selftest_check("series")
def oracle_round_trip(replications: int, seed: int) -> CheckResult:
    mismatches = []
    for expression in ("sqrt", "power:a=1/3", "mobius_sqrt", "entropy", "finite:[1/4,3/4]"):
        series = build_series(expression)
        rebuilt = coefficients_from_stopping(stopping_from_coefficients(series))
        if rebuilt.coefficients(64) != series.coefficients(64):
            mismatches.append(expression)
    return not mismatches, f"mismatched: {mismatches}" if mismatches else "64 coefficients each"


@selftest_check("series")
def catalog_identities(replications: int, seed: int) -> CheckResult:
    sqrt = catalog("sqrt")
    power_half = catalog("power", {"a": Fraction(1, 2)})
    fourth_root = catalog("power", {"a": Fraction(1, 4)})
    composed = compose(sqrt, sqrt, order=32)
    same_sqrt = power_half.coefficients(64) == sqrt.coefficients(64)
    same_root = composed.coefficients(32) == fourth_root.coefficients(32)
    return same_sqrt and same_root, f"power(1/2)=sqrt: {same_sqrt}, compose(sqrt,sqrt)=power(1/4): {same_root}"


@selftest_check("series")
def tracked_mass(replications: int, seed: int) -> CheckResult:
    worst = max(float(lower(catalog(name).partial_sum_at(128))) for name in ("log2_sqrt", "exp_sqrt"))
    return worst <= 1.0, f"largest lower partial sum {worst:.12f}"


@selftest_check("analysis")
def closed_forms(replications: int, seed: int) -> CheckResult:
    sqrt, entropy, identity = catalog("sqrt"), catalog("entropy"), catalog("finite", [1])
    checks = {
        "f sqrt(0.25)": eval_f(sqrt, 0.25).contains(0.5),
        "f entropy(0.5)": eval_f(entropy, 0.5).contains(0.5 * (1.0 - math.log(0.5))),
        "f' sqrt(0.25)": eval_f_prime(sqrt, 0.25).contains(1.0),
        "f' entropy(0.5)": eval_f_prime(entropy, 0.5).contains(-math.log(0.5)),
        "E alg1 sqrt(0.25)": expected_inputs_alg1(sqrt, 0.25).contains(2.0),
        "E alg2 identity(0.5)": expected_inputs_alg2(identity, 0.5).contains(9.0),
        "bound sqrt(0.25)": cramer_rao_bound(sqrt, 0.25).contains(0.75),
    }
    failed = [name for name, passed in checks.items() if not passed]
    return not failed, f"failed: {failed}" if failed else f"{len(checks)} closed forms"


@selftest_check("analysis")
def cost_dominates_bound(replications: int, seed: int) -> CheckResult:
    violations = []
    for expression in CATALOG_EXPRESSIONS + ("finite:[1]",):
        series = build_series(expression)
        for p in DOMINANCE_GRID:
            if expected_inputs_alg1(series, p).upper < cramer_rao_bound(series, p).lower:
                violations.append(f"{expression}@{p}")
    return not violations, f"violations: {violations}" if violations else f"{len(DOMINANCE_GRID)} points per entry"


@selftest_check("analysis")
def derivative_matches_differences(replications: int, seed: int) -> CheckResult:
    step, tolerance = 1e-6, 1e-12
    worst = 0.0
    for expression in CATALOG_EXPRESSIONS:
        series = build_series(expression)
        for p in LAW_GRID:
            difference = (eval_f(series, p + step, tolerance).value - eval_f(series, p - step, tolerance).value) / (2 * step)
            derivative = eval_f_prime(series, p, tolerance).value
            worst = max(worst, abs(difference - derivative) / abs(derivative))
    return worst <= 1e-4, f"largest relative gap {worst:.2e}"


@selftest_check("factory")
def output_and_cost_laws(replications: int, seed: int) -> CheckResult:
    failed = []
    for expression in ("sqrt", "entropy", "exp_sqrt"):
        failed += _failed_gates(_run(expression, LAW_GRID, replications, seed))
    return not failed, f"failed gates: {failed}" if failed else "mean Y, mean N and tail gates"


@selftest_check("factory")
def joint_stopping_law(replications: int, seed: int) -> CheckResult:
    sqrt = _run("sqrt", [0.25], replications, seed)
    entropy = _run("entropy", [0.5], replications, seed)
    sqrt_law = check_joint_law(sqrt, catalog("sqrt"), 0.25)
    entropy_law = check_joint_law(entropy, catalog("entropy"), 0.5)
    empty_first_cell = entropy.points[0].joint_y0.get(1, 0) == 0
    passed = sqrt_law.passed and entropy_law.passed and empty_first_cell
    return passed, f"sqrt chi-square p={sqrt_law.p_value:.3g}, entropy chi-square p={entropy_law.p_value:.3g}"


@selftest_check("factory")
def identity_uses_one_input(replications: int, seed: int) -> CheckResult:
    report = _run("finite:[1]", LAW_GRID, replications, seed)
    single = all(point.n_histogram == {1: point.completed} for point in report.points)
    return single and report.passed, "N = 1 on every replication" if single else "N != 1 observed"


@selftest_check("factory")
def transforms(replications: int, seed: int) -> CheckResult:
    failed = []
    for expression in ("complement(sqrt)", "flip_input(sqrt)", "scale(sqrt,alpha=1/2)", "prod(sqrt,entropy)", "chain(sqrt,sqrt)"):
        failed += _failed_gates(_run(expression, [0.25], replications, seed))
    return not failed, f"failed gates: {failed}" if failed else "five transforms"


@selftest_check("factory")
def baseline_comparison(replications: int, seed: int) -> CheckResult:
    fast = _run("sqrt", [0.5], replications, seed)
    slow = _run("sqrt", [0.5], replications, seed, algorithm=Algorithm.BASELINE, max_inputs=SELFTEST_BASELINE_CAP)
    z = compare_outputs(fast, slow, 0.5)
    cheaper = fast.points[0].mean_n < slow.points[0].mean_n
    return cheaper and abs(z) <= get_settings().gate_sigmas, (
        f"mean N {fast.points[0].mean_n:.3f} against {slow.points[0].mean_n:.3f}, Y law z={z:.2f}"
    )


@selftest_check("nonrand")
def fair_bits(replications: int, seed: int) -> CheckResult:
    sigmas = get_settings().gate_sigmas
    worst = 0.0
    for index, p in enumerate(LAW_GRID):
        coins = SimulatedCoin(p, np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
        draws = [von_neumann_bit(coins) for _ in range(replications)]
        ones = sum(bit for bit, _ in draws)
        pairs = np.array([count for _, count in draws], dtype=float)
        rate = 2.0 * p * (1.0 - p)
        worst = max(
            worst,
            abs(stats.proportion_z(ones, replications, 0.5)),
            abs(stats.z_score(pairs.mean(), 1.0 / rate, math.sqrt(1.0 - rate) / rate / math.sqrt(replications))),
        )
    return worst <= sigmas, f"largest |z| {worst:.2f}"


@selftest_check("nonrand")
def pair_counts_geometric(replications: int, seed: int) -> CheckResult:
    worst = 1.0
    for index, p in enumerate(LAW_GRID):
        coins = SimulatedCoin(p, np.random.SeedSequence(entropy=seed, spawn_key=(len(LAW_GRID) + index,)))
        histogram = Counter(von_neumann_bit(coins)[1] for _ in range(replications))
        _, _, p_value = stats.geometric_fit(histogram, 2.0 * p * (1.0 - p))
        worst = min(worst, p_value)
    return worst >= 1e-3, f"smallest geometric-fit p={worst:.3g}"


@selftest_check("nonrand")
def nonrandomized_sampler(replications: int, seed: int) -> CheckResult:
    report = _run("sqrt", [0.5], replications, seed, algorithm=Algorithm.NONRANDOMIZED)
    point = report.points[0]
    randomized = _run("sqrt", [0.5], replications, seed + 1).points[0]
    _, _, p_value = compare_histograms(randomized.n_histogram, point.outer_histogram)
    slope = stats.log_tail_slope(stats.tail_curve(point.n_histogram, point.completed), point.completed)
    failed = _failed_gates(report)
    passed = not failed and point.mean_uniforms == 0.0 and p_value >= 1e-3 and slope < 0
    return passed, (
        f"mean N {point.mean_n:.3f}, uniforms {point.mean_uniforms}, outer-law p={p_value:.3g}, "
        f"log-tail slope {slope:.3f}"
    )


@selftest_check("harness")
def seed_determinism(replications: int, seed: int) -> CheckResult:
    first = _run("sqrt", [0.5], replications // 5, seed)
    second = _run("sqrt", [0.5], replications // 5, seed)
    same = first.to_json() == second.to_json()
    return same, "identical reports" if same else "reports differ"


@selftest_check("cli")
def grammar_round_trip(replications: int, seed: int) -> CheckResult:
    expressions = ("sqrt", "compose(sqrt,sqrt,order=32)", "convex(power:a=1/2,entropy,alpha=0.3)", "scale(complement(sqrt),0.5)")
    stable = all(canonical(canonical(text)) == canonical(text) for text in expressions)
    try:
        canonical("power:a=1.5")
        rejected = False
    except ExpressionSyntaxError:
        rejected = True
    return stable and rejected, f"canonical forms stable: {stable}, out-of-range power rejected: {rejected}"


def run_selftest(
    replications: int = SELFTEST_REPLICATIONS,
    seed: Optional[int] = None,
    modules: Optional[Sequence[str]] = None,
) -> SelftestReport:
    """Run the registered checks.

    Args:
        replications (int): Samples per statistical check.
        seed (int, optional): Root seed, defaults to the configured seed.
        modules (Sequence[str], optional): Restrict to these modules.

    Returns:
        SelftestReport: One case per check; a check that raises is a failed case.
    """
    seed = seed if seed is not None else get_settings().seed
    started = time.perf_counter()
    cases = []
    for module, name, check in _CHECKS:
        if modules and module not in modules:
            continue
        try:
            passed, detail = check(replications, seed)
        except (FactoryError, ValueError, ArithmeticError) as check_exception:
            passed, detail = False, f"{type(check_exception).__name__}: {check_exception}"
        if passed:
            logger.info(f"selftest {module}.{name}: ok ({detail})")
        else:
            logger.warning(f"selftest {module}.{name}: FAILED ({detail})")
        cases.append(SelftestCase(module=module, name=name, passed=passed, detail=detail))
    logger.info(f"selftest finished in {time.perf_counter() - started:.1f}s")
    return SelftestReport(seed=seed, replications=replications, cases=cases)
