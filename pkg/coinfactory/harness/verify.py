"""Distributional checks of run reports against exact laws."""

import math
from typing import Callable
from typing import Optional
from typing import Sequence

from coinfactory.harness import stats
from coinfactory.harness.models.report import CellResult
from coinfactory.harness.models.report import JointLawResult
from coinfactory.harness.models.report import PointRecord
from coinfactory.harness.models.report import RunReport
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.interval import midpoint
from coinfactory.series.interval import upper
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import InsufficientReplicationsError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

TAIL_HORIZON = 30
MIN_EXPECTED_COUNT = 25
DEFAULT_SIGNIFICANCE = 1e-4


def tail_gate(
    tail: Sequence[float],
    total: int,
    bound: Callable[[int], float],
    sigmas: float,
    horizon: int = TAIL_HORIZON,
) -> tuple[bool, float]:
    """Whether the empirical Pr[N > n] stays below bound(n) plus `sigmas` binomial standard errors.

    Returns:
        tuple[bool, float]: The verdict and the largest excess in standard errors.
    """
    worst = -math.inf
    passed = True
    for n in range(1, horizon + 1):
        empirical = tail[n] if n < len(tail) else 0.0
        limit = bound(n)
        standard_error = math.sqrt(empirical * (1.0 - empirical) / total)
        excess = empirical - limit
        if standard_error > 0.0:
            worst = max(worst, excess / standard_error)
        elif excess > 0.0:
            worst = math.inf
        if excess > sigmas * standard_error:
            passed = False
    return passed, worst


def _point(report: RunReport, p: float) -> PointRecord:
    point = report.point(p)
    if not math.isclose(point.p, p, rel_tol=1e-9):
        raise ValueError(f"The report has no grid point at p={p}")
    return point


def check_joint_law(
    report: RunReport,
    c: CoefficientSeries,
    p: float,
    sigmas: Optional[float] = None,
    min_expected: int = MIN_EXPECTED_COUNT,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> JointLawResult:
    """Test the joint law Pr[N = n, Y = 0] = c_n (1-p)^n of the randomized factory.

    Cells n = 1, 2, ... are tested while their expected count is at least
    `min_expected`; cells with probability exactly 0 must be empty. The
    aggregate chi-square adds one cell for every other outcome.

    Args:
        report (RunReport): A randomized run with the joint histogram.
        c (CoefficientSeries): The series the run simulated.
        p (float): The grid point to test.
        sigmas (float, optional): Per-cell gate, defaults to the configured 4.
        min_expected (int): Smallest expected count of a tested cell.
        significance (float): Level of the aggregate chi-square test.

    Raises:
        InsufficientReplicationsError: No cell is testable.
    """
    sigmas = sigmas or get_settings().gate_sigmas
    point = _point(report, p)
    if point.joint_y0 is None:
        raise ValueError("The report carries no joint (N, Y = 0) histogram")
    total = point.completed

    cells: list[CellResult] = []
    n = 0
    while True:
        n += 1
        # no later cell can reach min_expected once the remaining mass is too small
        if total * float(upper(c.remaining_mass(n - 1))) * (1.0 - p) ** n < min_expected:
            break
        coefficient = c.coefficient_at(n)
        observed = point.joint_y0.get(n, 0)
        if c.exact and coefficient == 0:
            cells.append(CellResult(n=n, observed=observed, expected=0.0, z=0.0 if observed == 0 else math.inf, passed=observed == 0))
            continue
        probability = float(midpoint(coefficient)) * (1.0 - p) ** n
        expected = total * probability
        if expected < min_expected:
            continue
        z = stats.proportion_z(observed, total, probability)
        cells.append(CellResult(n=n, observed=observed, expected=expected, z=z, passed=abs(z) <= sigmas))

    tested = [cell for cell in cells if cell.expected > 0.0]
    if not tested:
        raise InsufficientReplicationsError(f"No joint-law cell reaches {min_expected} expected observations at p={p}")
    rest_observed = total - sum(cell.observed for cell in tested)
    rest_expected = total - sum(cell.expected for cell in tested)
    statistic, dof, p_value = stats.chi_square(
        [cell.observed for cell in tested] + [rest_observed],
        [cell.expected for cell in tested] + [rest_expected],
    )
    passed = all(cell.passed for cell in cells) and p_value >= significance
    if not passed:
        logger.warning(f"Joint law rejected at p={p}: chi-square {statistic:.2f} on {dof} dof")
    return JointLawResult(p=p, cells=cells, chi_square=statistic, dof=dof, p_value=p_value, passed=passed)


def compare_outputs(first: RunReport, second: RunReport, p: float) -> float:
    """Two-proportion z statistic between the Y-means of two reports at p."""
    a, b = _point(first, p), _point(second, p)
    return stats.two_proportion_z(round(a.mean_y * a.completed), a.completed, round(b.mean_y * b.completed), b.completed)


def compare_histograms(first: dict[int, int], second: dict[int, int]) -> tuple[float, int, float]:
    """Chi-square homogeneity of two histograms (e.g. outer iterations against N)."""
    return stats.histogram_homogeneity(first, second)
