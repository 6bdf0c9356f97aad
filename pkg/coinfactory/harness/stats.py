"""Estimators, confidence intervals and the statistical tests used by the gates."""

import math
from typing import Mapping
from typing import Optional
from typing import Sequence

import numpy as np
from scipy import stats

from coinfactory.utils.errors import InsufficientReplicationsError


def normal_quantile(confidence: float) -> float:
    """Two-sided standard normal quantile z with Pr[|Z| <= z] = confidence."""
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    return float(stats.norm.ppf(0.5 + confidence / 2.0))


def wilson_interval(successes: int, total: int, confidence: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total < 1:
        raise ValueError("A proportion needs at least one trial")
    z = normal_quantile(confidence)
    phat = successes / total
    denominator = 1.0 + z * z / total
    centre = (phat + z * z / (2.0 * total)) / denominator
    half_width = z * math.sqrt(phat * (1.0 - phat) / total + z * z / (4.0 * total * total)) / denominator
    return max(centre - half_width, 0.0), min(centre + half_width, 1.0)


def normal_interval(mean: float, sd: float, total: int, confidence: float) -> tuple[float, float]:
    """Normal-approximation interval for a mean."""
    half_width = normal_quantile(confidence) * sd / math.sqrt(total)
    return mean - half_width, mean + half_width


def moments(total: int, sum_values: float, sum_squares: float) -> tuple[float, float]:
    """Sample mean and standard deviation (ddof = 1) from running sums."""
    if total < 1:
        return math.nan, math.nan
    mean = sum_values / total
    if total < 2:
        return mean, math.nan
    variance = max(sum_squares - total * mean * mean, 0.0) / (total - 1)
    return mean, math.sqrt(variance)


def z_score(observed: float, expected: float, standard_error: float, slack: float = 0.0) -> float:
    """(observed - expected) / standard_error, after moving `observed` by up to `slack` towards `expected`."""
    gap = observed - expected
    gap = math.copysign(max(abs(gap) - slack, 0.0), gap)
    if standard_error <= 0.0:
        return 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
    return gap / standard_error


def proportion_z(successes: int, total: int, expected: float, slack: float = 0.0) -> float:
    """z-score of an observed proportion against an exact probability."""
    return z_score(successes / total, expected, math.sqrt(expected * (1.0 - expected) / total), slack)


def two_proportion_z(successes_a: int, total_a: int, successes_b: int, total_b: int) -> float:
    """Pooled two-proportion z statistic."""
    pooled = (successes_a + successes_b) / (total_a + total_b)
    standard_error = math.sqrt(pooled * (1.0 - pooled) * (1.0 / total_a + 1.0 / total_b))
    return z_score(successes_a / total_a, successes_b / total_b, standard_error)


def chi_square(observed: Sequence[float], expected: Sequence[float]) -> tuple[float, int, float]:
    """Pearson statistic, degrees of freedom and p-value for fully specified cells."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    statistic = float(((observed - expected) ** 2 / expected).sum())
    dof = len(observed) - 1
    return statistic, dof, float(stats.chi2.sf(statistic, dof))


def histogram_homogeneity(
    first: Mapping[int, int],
    second: Mapping[int, int],
    min_expected: float = 5.0,
) -> tuple[float, int, float]:
    """Chi-square test that two histograms come from the same law.

    Cells are the common support in increasing order; sparse cells at the
    tail are pooled into one until every expected count reaches `min_expected`.
    """
    support = sorted(set(first) | set(second))
    table = np.array([[first.get(value, 0) for value in support], [second.get(value, 0) for value in support]], dtype=float)
    pooled: list[np.ndarray] = []
    pending = np.zeros(2)
    grand_total = table.sum()
    row_share = table.sum(axis=1) / grand_total
    for column in table.T:
        pending = pending + column
        if (row_share * pending.sum()).min() >= min_expected:
            pooled.append(pending)
            pending = np.zeros(2)
    if pending.sum() > 0:
        if pooled:
            pooled[-1] = pooled[-1] + pending
        else:
            pooled.append(pending)
    if len(pooled) < 2:
        raise InsufficientReplicationsError("Fewer than two testable cells in the histograms")
    statistic, p_value, dof, _ = stats.chi2_contingency(np.array(pooled).T, correction=False)
    return float(statistic), int(dof), float(p_value)


def geometric_fit(histogram: Mapping[int, int], parameter: float, cells: int = 10) -> tuple[float, int, float]:
    """Chi-square goodness of fit of a histogram on {1, 2, ...} to Geometric(parameter).

    Uses the cells 1..cells and one pooled cell for larger values.
    """
    total = sum(histogram.values())
    if total < 1:
        raise InsufficientReplicationsError("Empty histogram")
    observed = [histogram.get(value, 0) for value in range(1, cells + 1)]
    observed.append(total - sum(observed))
    probabilities = [stats.geom.pmf(value, parameter) for value in range(1, cells + 1)]
    probabilities.append(stats.geom.sf(cells, parameter))
    expected = [total * probability for probability in probabilities]
    return chi_square(observed, expected)


def tail_curve(histogram: Mapping[int, int], total: Optional[int] = None) -> list[float]:
    """Pr[N > n] for n = 0..max observed N."""
    total = total if total is not None else sum(histogram.values())
    if not histogram:
        return [0.0]
    largest = max(histogram)
    counts = np.zeros(largest + 1)
    for value, count in histogram.items():
        counts[value] = count
    above = total - np.cumsum(counts)
    return (above / total).tolist()


def log_tail_slope(tail: Sequence[float], total: int, min_count: int = 30) -> float:
    """Least-squares slope of log Pr[N > n] against n over the well-populated part of the tail."""
    tail = np.asarray(tail, dtype=float)
    usable = np.flatnonzero(tail * total >= min_count)
    usable = usable[usable >= 1]
    if len(usable) < 3:
        raise InsufficientReplicationsError("Fewer than three tail points with enough observations")
    slope, _ = np.polyfit(usable.astype(float), np.log(tail[usable]), 1)
    return float(slope)


def log_log_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    slope, _ = np.polyfit(np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float)), 1)
    return float(slope)
