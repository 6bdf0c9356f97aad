"""Stopping probabilities d_k = c_k / (1 - sum_{j<k} c_j) and their inverse."""

import threading
from fractions import Fraction
from typing import Callable
from typing import Optional

from coinfactory.series.coefficients import ONE
from coinfactory.series.coefficients import ZERO
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.coefficients import SeriesKind
from coinfactory.series.coefficients import check_index
from coinfactory.series.interval import TRACKING_LOCK
from coinfactory.series.interval import Scalar
from coinfactory.series.interval import clip
from coinfactory.series.interval import enclose
from coinfactory.series.interval import is_tracked
from coinfactory.series.interval import lower
from coinfactory.series.interval import upper
from coinfactory.series.interval import width
from coinfactory.series.interval import working_precision
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import InconsistentSeriesError
from coinfactory.utils.errors import InsufficientPrecisionError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)


def _floor_scaled(value: Fraction, bits: int) -> int:
    return (value.numerator << bits) // value.denominator


def _ceil_scaled(value: Fraction, bits: int) -> int:
    return -((-value.numerator << bits) // value.denominator)


class StoppingSequence:
    """The conditional stopping probabilities d_k = Pr[L = k | L >= k].

    A sequence is either derived from a `CoefficientSeries` (see
    `stopping_from_coefficients`) or given directly by a function of k.
    Values are exact fractions, or `iv.mpf` enclosures for tracked sources;
    interval sources are refined (precision doubled) whenever a caller asks
    for a tighter enclosure than the current one, up to `precision_ceiling`.

    Args:
        source (CoefficientSeries, optional): The series the sequence is derived from.
        d_function (Callable, optional): Explicit k -> d_k, used when there is no source.
        terminal_index (int, optional): K with d_K = 1 for explicit sequences.
        closed_form (bool): Use the catalog's closed form of d_k when available.
        precision_ceiling (int, optional): Highest precision, in bits, to refine to.
    """

    def __init__(
        self,
        source: Optional[CoefficientSeries] = None,
        d_function: Optional[Callable[[int], Scalar]] = None,
        terminal_index: Optional[int] = None,
        closed_form: bool = True,
        precision_ceiling: Optional[int] = None,
    ):
        if (source is None) == (d_function is None):
            raise ValueError("Provide exactly one of source or d_function")
        self.source = source
        self._working = source
        self._d_function = d_function
        self._closed_form = closed_form
        self._terminal_index = source.terminal_index if source is not None else terminal_index
        self.precision_ceiling = precision_ceiling or get_settings().digit_ceiling
        self._values: dict[int, Scalar] = {}
        self._brackets: dict[tuple[int, int], tuple[int, int]] = {}
        self._lock = TRACKING_LOCK if source is not None and not source.exact else threading.RLock()

    @property
    def terminal_index(self) -> Optional[int]:
        return self._terminal_index

    @property
    def exact(self) -> bool:
        if self.source is not None:
            return self.source.exact
        return True

    @property
    def precision(self) -> Optional[int]:
        return None if self._working is None else self._working.precision

    def _compute(self, k: int) -> Scalar:
        if self._d_function is not None:
            value = self._d_function(k)
            if not is_tracked(value):
                value = Fraction(value)
            if lower(value) < 0 or upper(value) > 1:
                raise InconsistentSeriesError(f"d_{k} = {value} is not a probability")
            return value

        if self._closed_form:
            closed = self._working.closed_form_stopping(k)
            if closed is not None:
                return closed

        coefficient = self._working.coefficient_at(k)
        partial = self._working.partial_sum_at(k - 1)
        if is_tracked(coefficient) or is_tracked(partial):
            with working_precision(self._working.precision):
                denominator = enclose(ONE) - enclose(partial)
                if lower(denominator) <= 0:
                    raise InsufficientPrecisionError(
                        f"{self._working.name}: denominator of d_{k} not separated from zero "
                        f"at {self._working.precision} bits",
                    )
                return clip(enclose(coefficient) / denominator)

        denominator = ONE - partial
        if denominator == 0:
            if coefficient > 0:
                raise InconsistentSeriesError(
                    f"{self._working.name}: c_{k} = {coefficient} > 0 after the coefficients summed to 1",
                )
            raise IndexError(f"d_{k} is undefined beyond the terminal index")
        return coefficient / denominator

    def d_at(self, k: int) -> Scalar:
        """d_k at the current precision."""
        check_index(k)
        if self._terminal_index is not None and k > self._terminal_index:
            raise IndexError(f"d_{k} is undefined beyond the terminal index {self._terminal_index}")
        with self._lock:
            value = self._values.get(k)
            if value is None:
                value = self._compute(k)
                self._values[k] = value
            return value

    def _escalate(self):
        current = self._working.precision
        target = current * 2
        if target > self.precision_ceiling:
            raise InsufficientPrecisionError(
                f"{self.source.name}: precision ceiling of {self.precision_ceiling} bits reached",
            )
        logger.info(f"Refining {self.source.name} from {current} to {target} bits")
        self._working = self.source.refined(target)
        self._values = {}
        self._brackets = {}

    def bounds(self, k: int, bits: int) -> Scalar:
        """An enclosure of d_k of width at most 2**-bits (the value itself when exact)."""
        limit = Fraction(1, 2**bits)
        with self._lock:
            while True:
                try:
                    value = self.d_at(k)
                except InsufficientPrecisionError:
                    if self._d_function is not None or self.exact:
                        raise
                    self._escalate()
                    continue
                if not is_tracked(value) or self._d_function is not None or width(value) <= limit:
                    return value
                self._escalate()

    def bracket(self, k: int, bits: int) -> tuple[int, int]:
        """(floor(lo * 2^bits), ceil(hi * 2^bits)) for an enclosure [lo, hi] of d_k.

        A uniform whose first `bits` binary digits form the integer w is below
        d_k for sure when w + 1 <= floor, and above it when w >= ceil.
        """
        key = (k, bits)
        with self._lock:
            cached = self._brackets.get(key)
            if cached is None:
                value = self.bounds(k, bits)
                cached = (_floor_scaled(lower(value), bits), _ceil_scaled(upper(value), bits))
                self._brackets[key] = cached
            return cached


def stopping_from_coefficients(
    c: CoefficientSeries,
    closed_form: bool = True,
    precision_ceiling: Optional[int] = None,
) -> StoppingSequence:
    """Derive the lazy stopping sequence of a coefficient series.

    Args:
        c (CoefficientSeries): The series.
        closed_form (bool): Use the catalog's closed form of d_k when there is
            one instead of the ratio c_k / (1 - sum_{j<k} c_j).
        precision_ceiling (int, optional): Refinement limit for interval series.

    Returns:
        StoppingSequence: d_k, computed on demand.
    """
    return StoppingSequence(source=c, closed_form=closed_form, precision_ceiling=precision_ceiling)


class StoppingDerivedSeries(CoefficientSeries):
    """c_k = d_k * prod_{j<k} (1 - d_j) for a given stopping sequence."""

    kind = SeriesKind.COMBINATOR

    def __init__(self, stopping: StoppingSequence):
        self.stopping = stopping
        self._survival: list[Scalar] = [ONE]
        name = f"from_stopping({stopping.source.name})" if stopping.source is not None else "from_stopping"
        super().__init__(name=name, exact=stopping.exact, precision=stopping.precision)

    def _compute_coefficient(self, k: int) -> Scalar:
        terminal = self.stopping.terminal_index
        if terminal is not None and k > terminal:
            return ZERO
        d = self.lift(self.stopping.d_at(k))
        survival = self.lift(self._survival[k - 1])
        self._survival.append(survival * (self.lift(ONE) - d))
        return d * survival

    @property
    def terminal_index(self) -> Optional[int]:
        return self.stopping.terminal_index


def coefficients_from_stopping(d: StoppingSequence) -> CoefficientSeries:
    """Rebuild c_k = d_k prod_{j<k} (1 - d_j)."""
    return StoppingDerivedSeries(d)
