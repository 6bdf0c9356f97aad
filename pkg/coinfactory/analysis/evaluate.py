"""Truncated evaluation of f(p), f'(p), expected costs and the sequential lower bound.

Every result carries a guaranteed error bound. Catalog series are summed
from double precision coefficients in vectorised blocks; the bound then
combines

* the series tail: sum_{k>K} c_k q^k <= (1 - S_K) q^(K+1) with q = 1 - p, and
  sum_{k>K} k c_k q^(k-1) <= (1 - S_K) (K+1) q^K once (K+1) log(1/q) >= 1,
  because x q^(x-1) decreases for x >= 1/log(1/q);
* floating point rounding: at most 3k + 3 units of 2^-50 relative error on
  the k-th term, plus the pairwise summation error of the block.

Combinator series are evaluated through their children (the product with
complement and the convex combination algebraically, the composition by
evaluating the outer function on the enclosure of the inner value), since
f is increasing and f' decreasing in p. Series without a fast path (finite
lists, explicit stopping sequences) are summed from their stopping
probabilities, c_k = d_k prod_{j<k} (1 - d_j); the enclosure radius r_j of
an interval-valued d_j moves every c_k by at most r_j, which adds
sum_j r_j / p (or / p^2 for f') to the bound.
"""

import math
from typing import Callable
from typing import Union

import numpy as np

from coinfactory.analysis.models.result import EvalResult
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.combinators import CompositionSeries
from coinfactory.series.combinators import ConvexCombinationSeries
from coinfactory.series.combinators import ProductComplementSeries
from coinfactory.series.interval import is_tracked
from coinfactory.series.interval import midpoint
from coinfactory.series.interval import width
from coinfactory.series.stopping import StoppingSequence
from coinfactory.series.stopping import stopping_from_coefficients
from coinfactory.utils.errors import ToleranceError


DEFAULT_TOLERANCE = 1e-9
MAX_TERMS = 1 << 22
UNIT_ROUNDOFF = 2.0**-50
FIRST_BLOCK = 64
MAX_BLOCK = 1 << 16
# child tolerances are divided by this factor until the combined bound fits
TIGHTENING = 16.0
MAX_TIGHTENINGS = 4

SeriesLike = Union[CoefficientSeries, StoppingSequence]


def as_stopping(c: SeriesLike) -> StoppingSequence:
    """The stopping sequence of a series (a stopping sequence is returned as is)."""
    if isinstance(c, StoppingSequence):
        return c
    return stopping_from_coefficients(c)


def _check_probability(p: float):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def _check_tolerance(tol: float):
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")


def _tail_bound(survival: float, evaluated: int, q: float, log_inverse_q: float, derivative: bool) -> float:
    if derivative:
        if (evaluated + 1) * log_inverse_q < 1.0:
            return math.inf
        tail = survival * (evaluated + 1) * q**evaluated
    else:
        tail = survival * q ** (evaluated + 1)
    return tail * (1.0 + (evaluated + 3) * UNIT_ROUNDOFF)


def _give_up(p: float, tol: float, rounding: float, tail: float, evaluated: int):
    if tail <= tol / 2 and rounding > tol / 2:
        raise ToleranceError(f"Rounding error {rounding:.3g} exceeds the tolerance {tol:.3g} at p={p}")
    if evaluated >= MAX_TERMS:
        raise ToleranceError(f"Tolerance {tol:.3g} not reached within {MAX_TERMS} terms at p={p}")


def _sum_floats(series: CoefficientSeries, p: float, tol: float, derivative: bool) -> EvalResult:
    """sum c_k q^k (or sum k c_k q^(k-1)) from the vectorised catalog coefficients."""
    q = 1.0 - p
    log_inverse_q = -math.log(q)
    stop = FIRST_BLOCK
    while True:
        c = series.float_coefficients(stop)
        ks = np.arange(1, stop + 1, dtype=float)
        if derivative:
            terms = ks * c * np.power(q, ks - 1.0)
        else:
            terms = c * np.power(q, ks)
        total = float(terms.sum())
        rounding = (float(((3.0 * ks + 3.0) * terms).sum()) + (math.log2(stop) + 1.0) * total) * UNIT_ROUNDOFF

        survival = max(1.0 - float(c.sum()), 0.0) + (stop + 1) * UNIT_ROUNDOFF
        tail = _tail_bound(min(survival, 1.0), stop, q, log_inverse_q, derivative)
        error = tail + rounding
        if error <= tol:
            return EvalResult(value=total, error_bound=error, terms_used=stop)
        _give_up(p, tol, rounding, tail, stop)
        stop *= 2


def _stopping_block(stopping: StoppingSequence, start: int, stop: int) -> tuple[np.ndarray, float]:
    values = np.empty(stop - start + 1)
    radius = 0.0
    for offset, k in enumerate(range(start, stop + 1)):
        d = stopping.d_at(k)
        if is_tracked(d):
            radius += float(width(d)) / 2
        values[offset] = float(midpoint(d))
    return values, radius


def _sum_stopping(stopping: StoppingSequence, p: float, tol: float, derivative: bool) -> EvalResult:
    """The same sums generated from the stopping probabilities."""
    q = 1.0 - p
    log_inverse_q = -math.log(q)
    terminal = stopping.terminal_index
    survival = 1.0
    total = 0.0
    rounding = 0.0
    radius = 0.0
    evaluated = 0
    block = FIRST_BLOCK

    while True:
        stop = evaluated + block if terminal is None else min(evaluated + block, terminal)
        d, block_radius = _stopping_block(stopping, evaluated + 1, stop)
        radius += block_radius
        ks = np.arange(evaluated + 1, stop + 1, dtype=float)

        survival_before = survival * np.concatenate(([1.0], np.cumprod(1.0 - d)[:-1]))
        coefficients = d * survival_before
        survival = float(survival_before[-1] * (1.0 - d[-1]))

        if derivative:
            terms = ks * coefficients * np.power(q, ks - 1.0)
        else:
            terms = coefficients * np.power(q, ks)
        total += float(terms.sum())
        rounding += float(((3.0 * ks + 3.0) * terms).sum()) * UNIT_ROUNDOFF
        evaluated = stop

        if terminal is not None and evaluated >= terminal:
            tail = 0.0
        else:
            tail = _tail_bound(survival + evaluated * UNIT_ROUNDOFF, evaluated, q, log_inverse_q, derivative)

        coefficient_error = radius / (p * p) if derivative else radius / p
        error = tail + rounding + coefficient_error
        if error <= tol:
            return EvalResult(value=total, error_bound=error, terms_used=evaluated)
        _give_up(p, tol, rounding + coefficient_error, tail, evaluated)
        block = min(block * 2, MAX_BLOCK)


def _tightened(combine: Callable[[float], EvalResult], tol: float, p: float) -> EvalResult:
    child_tol = tol / 4.0
    for _ in range(MAX_TIGHTENINGS):
        result = combine(child_tol)
        if result.error_bound <= tol:
            return result
        child_tol /= TIGHTENING
    raise ToleranceError(f"Tolerance {tol:.3g} not reached for a combined series at p={p}")


def _hull(values: list[float], terms_used: int) -> EvalResult:
    return EvalResult.from_bounds(min(values), max(values), terms_used=terms_used)


def _evaluate(c: SeriesLike, p: float, tol: float, derivative: bool) -> EvalResult:
    """f(p) (or f'(p)) of a series with |error| <= tol."""
    if isinstance(c, StoppingSequence):
        if c.source is None:
            tail_sum = _sum_stopping(c, p, tol, derivative)
            return tail_sum if derivative else tail_sum.complement()
        c = c.source

    if isinstance(c, ConvexCombinationSeries):
        alpha = float(c.alpha)
        return _tightened(
            lambda child_tol: _evaluate(c.first, p, child_tol, derivative)
            .scaled(alpha)
            .plus(_evaluate(c.second, p, child_tol, derivative).scaled(1.0 - alpha)),
            tol,
            p,
        )

    if isinstance(c, ProductComplementSeries):
        return _tightened(lambda child_tol: _product_complement(c, p, child_tol, derivative), tol, p)

    if isinstance(c, CompositionSeries):
        return _tightened(lambda child_tol: _composition(c, p, child_tol, derivative), tol, p)

    if c.has_fast_floats:
        tail_sum = _sum_floats(c, p, tol, derivative)
    else:
        tail_sum = _sum_stopping(as_stopping(c), p, tol, derivative)
    return tail_sum if derivative else tail_sum.complement()


def _product_complement(c: ProductComplementSeries, p: float, tol: float, derivative: bool) -> EvalResult:
    # 1 - g = (1 - f1)(1 - f2) and g' = f1' (1 - f2) + f2' (1 - f1)
    rest_first = _evaluate(c.first, p, tol, False).complement()
    rest_second = _evaluate(c.second, p, tol, False).complement()
    if not derivative:
        return rest_first.times(rest_second).complement()
    first_slope = _evaluate(c.first, p, tol, True)
    second_slope = _evaluate(c.second, p, tol, True)
    return first_slope.times(rest_second).plus(second_slope.times(rest_first))


def _composition(c: CompositionSeries, p: float, tol: float, derivative: bool) -> EvalResult:
    inner = _evaluate(c.inner, p, tol, False)
    low, high = max(inner.lower, 0.0), min(inner.upper, 1.0)
    if not 0.0 < low <= high < 1.0:
        return EvalResult(value=inner.value, error_bound=math.inf, terms_used=inner.terms_used)
    at_low = _evaluate(c.outer, low, tol, derivative)
    at_high = at_low if high == low else _evaluate(c.outer, high, tol, derivative)
    terms_used = max(inner.terms_used, at_low.terms_used, at_high.terms_used)
    if not derivative:
        # f is increasing
        return _hull([at_low.lower, at_high.upper], terms_used)
    # f' is decreasing, so the outer slope on [low, high] lies in [f'(high), f'(low)]
    outer_slope = _hull([at_high.lower, at_low.upper], terms_used)
    return outer_slope.times(_evaluate(c.inner, p, tol, True))


def eval_f(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """f(p) = 1 - sum_k c_k (1-p)^k with |error| <= tol.

    Args:
        c: The coefficient series (or its stopping sequence).
        p (float): Probability in (0, 1).
        tol (float): Requested absolute accuracy.

    Returns:
        EvalResult: f(p), its error bound and the number of terms used.
    """
    _check_probability(p)
    _check_tolerance(tol)
    return _evaluate(c, p, tol, derivative=False)


def eval_f_prime(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """f'(p) = sum_k k c_k (1-p)^(k-1) with |error| <= tol."""
    _check_probability(p)
    _check_tolerance(tol)
    return _evaluate(c, p, tol, derivative=True)


def expected_inputs_alg1(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """E[N] = f(p) / p for the randomized factory."""
    return eval_f(c, p, tol).scaled(1.0 / p)


def alg2_cost_factor(p: float) -> float:
    """Inputs per outer iteration of the non-randomized factory: 1 + 2 / (p (1-p))."""
    return 1.0 + 2.0 / (p * (1.0 - p))


def expected_inputs_alg2(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """E[N] = f(p) / p * (1 + 2 / (p (1-p))) for the non-randomized factory."""
    return expected_inputs_alg1(c, p, tol).scaled(alg2_cost_factor(p))


def _variance_range(f: EvalResult) -> tuple[float, float]:
    lower, upper = f.lower, f.upper
    if lower <= 0.0 or upper >= 1.0:
        raise ValueError(f"f(p) = {f.value} +/- {f.error_bound} is not separated from 0 and 1")
    ends = (lower * (1.0 - lower), upper * (1.0 - upper))
    smallest = min(ends)
    largest = 0.25 if lower <= 0.5 <= upper else max(ends)
    return smallest, largest


def cramer_rao_from_values(f: EvalResult, f_prime: EvalResult, p: float) -> EvalResult:
    """E[N] >= f'(p)^2 p (1-p) / (f(p) (1 - f(p))) for evaluated f and f'."""
    smallest, largest = _variance_range(f)
    slope_low = max(f_prime.lower, 0.0)
    slope_high = max(f_prime.upper, 0.0)
    information = p * (1.0 - p)
    return EvalResult.from_bounds(
        slope_low**2 * information / largest,
        slope_high**2 * information / smallest,
        terms_used=max(f.terms_used, f_prime.terms_used),
    )


def cramer_rao_bound(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """Lower bound on E[N] for any fast factory of f at p."""
    return cramer_rao_from_values(eval_f(c, p, tol), eval_f_prime(c, p, tol), p)


def linear_lower_bound(scale: float, p: float) -> float:
    """The sequential bound for f(p) = scale * p: scale (1-p) / (1 - scale p)."""
    _check_probability(p)
    if not 0.0 < scale * p < 1.0:
        raise ValueError(f"scale * p must lie in (0, 1), got {scale * p}")
    return scale * (1.0 - p) / (1.0 - scale * p)


def elasticity(c: SeriesLike, p: float, tol: float = DEFAULT_TOLERANCE) -> EvalResult:
    """p f'(p) / f(p); bounded away from 0 as p -> 0 for the asymptotically optimal class."""
    f = eval_f(c, p, tol)
    f_prime = eval_f_prime(c, p, tol)
    if f.lower <= 0.0:
        raise ValueError(f"f(p) is not separated from 0 at p={p}")
    return EvalResult.from_bounds(
        p * max(f_prime.lower, 0.0) / f.upper,
        p * f_prime.upper / f.lower,
        terms_used=max(f.terms_used, f_prime.terms_used),
    )
