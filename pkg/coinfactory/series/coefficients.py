"""Lazy coefficient sequences c_k of f(p) = 1 - sum_k c_k (1-p)^k."""

import threading
from abc import ABC
from abc import abstractmethod
from contextlib import AbstractContextManager
from enum import Enum
from fractions import Fraction
from typing import Optional
from typing import Sequence

import numpy as np

from coinfactory.series.interval import TRACKING_LOCK
from coinfactory.series.interval import Scalar
from coinfactory.series.interval import clip
from coinfactory.series.interval import constant_enclosure
from coinfactory.series.interval import enclose
from coinfactory.series.interval import is_tracked
from coinfactory.series.interval import lower
from coinfactory.series.interval import midpoint
from coinfactory.series.interval import working_precision
from coinfactory.utils.errors import InconsistentSeriesError


ZERO = Fraction(0)
ONE = Fraction(1)


class SeriesKind(str, Enum):
    """How a coefficient series was obtained."""

    CATALOG = "catalog"
    FINITE = "finite"
    COMBINATOR = "combinator"


def check_index(k: int):
    """Coefficients are indexed from 1."""
    if not isinstance(k, int) or k < 1:
        raise IndexError(f"Coefficient index must be a positive integer, got {k!r}")


class CoefficientSeries(ABC):
    """Memoised provider of c_k and of the partial sums sum_{j<=k} c_j.

    Subclasses implement `_compute_coefficient`. Exact series return
    `Fraction` values; tracked-precision series return `iv.mpf` enclosures
    whose width shrinks with `precision`, computed inside
    `working_precision(precision)`.

    The memo tables only grow, under a lock; readers never see a partially
    extended table. Tracked series share the global tracking lock.
    """

    kind: SeriesKind = SeriesKind.CATALOG

    def __init__(self, name: str, exact: bool = True, precision: Optional[int] = None):
        self.name = name
        self.exact = exact
        self.precision = precision
        self._coefficients: list[Scalar] = []
        self._partial_sums: list[Scalar] = []
        self._lock = threading.RLock() if exact else TRACKING_LOCK

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"

    @property
    def exactness(self) -> str:
        return "exact-rational" if self.exact else "tracked-precision"

    @abstractmethod
    def _compute_coefficient(self, k: int) -> Scalar:
        """Compute c_k; called once per index, in increasing order."""

    def _finish_partial_sum(self, running: Scalar) -> Scalar:
        return running

    def _guard(self) -> AbstractContextManager:
        """The lock to extend under; tracked series also set the working precision."""
        return self._lock if self.exact else working_precision(self.precision)

    def lift(self, value: Scalar) -> Scalar:
        """`value` in this series' arithmetic: unchanged when exact, enclosed when tracked."""
        return value if self.exact else enclose(value)

    def _extend(self, k: int):
        with self._guard():
            while len(self._coefficients) < k:
                index = len(self._coefficients) + 1
                value = self._compute_coefficient(index)
                if lower(value) < 0:
                    raise InconsistentSeriesError(
                        f"{self.name}: negative coefficient at k={index}",
                    )
                previous = self._partial_sums[-1] if self._partial_sums else ZERO
                self._partial_sums.append(self._finish_partial_sum(self.lift(previous) + self.lift(value)))
                self._coefficients.append(value)

    def coefficient_at(self, k: int) -> Scalar:
        """c_k for k >= 1."""
        check_index(k)
        if k > len(self._coefficients):
            self._extend(k)
        return self._coefficients[k - 1]

    def partial_sum_at(self, k: int) -> Scalar:
        """sum_{j<=k} c_j for k >= 0."""
        if k == 0:
            return ZERO
        check_index(k)
        if k > len(self._partial_sums):
            self._extend(k)
        return self._partial_sums[k - 1]

    def remaining_mass(self, k: int) -> Scalar:
        """1 - partial_sum_at(k): bounds sum_{j>k} c_j (1-p)^j / (1-p)^(k+1)."""
        partial = self.partial_sum_at(k)
        if not is_tracked(partial):
            return ONE - partial
        with working_precision(self.precision):
            return clip(enclose(ONE) - partial)

    def coefficients(self, count: int) -> list[Scalar]:
        """The first `count` coefficients."""
        if count > 0:
            self.coefficient_at(count)
        return list(self._coefficients[:count])

    @property
    def terminal_index(self) -> Optional[int]:
        """Index K of the last non-zero coefficient of a finite series, else None."""
        return None

    def closed_form_stopping(self, k: int) -> Optional[Fraction]:
        """Closed form of d_k when the catalog entry has one."""
        return None

    def float_coefficients(self, stop: int) -> np.ndarray:
        """c_1..c_stop in double precision (interval midpoints for tracked series).

        Catalog entries override this with vectorised recurrences whose k-th
        value carries a relative rounding error of at most 3k units.
        """
        return np.array([float(midpoint(value)) for value in self.coefficients(stop)], dtype=float)

    @property
    def has_fast_floats(self) -> bool:
        return False

    def refined(self, bits: int) -> "CoefficientSeries":
        """A copy carrying at least `bits` of precision (exact series return self)."""
        return self


class FiniteSeries(CoefficientSeries):
    """A finite coefficient list (c_1, ..., c_K) summing to exactly 1.

    Args:
        values (Sequence[Fraction]): The coefficients; non-negative, at least
            one of them positive, summing to 1.
    """

    kind = SeriesKind.FINITE

    def __init__(self, values: Sequence):
        values = [Fraction(value) for value in values]
        if not values or all(value == 0 for value in values):
            raise InconsistentSeriesError("A finite series needs a positive coefficient")
        if any(value < 0 for value in values):
            raise InconsistentSeriesError("Finite series coefficients must be non-negative")
        total = sum(values, ZERO)
        if total != 1:
            raise InconsistentSeriesError(
                f"Finite series must sum to exactly 1 (got {total}); "
                "smaller sums go through the scale transform",
            )
        while values[-1] == 0:
            values.pop()
        self.values = tuple(values)
        body = ",".join(format_fraction(value) for value in self.values)
        super().__init__(name=f"finite:[{body}]")

    def _compute_coefficient(self, k: int) -> Fraction:
        return self.values[k - 1] if k <= len(self.values) else ZERO

    @property
    def terminal_index(self) -> int:
        return len(self.values)


class ScaledSeries(CoefficientSeries):
    """Series c_k = r_k * K with exact rationals r_k and an irrational constant K.

    Coefficients and partial sums are intervals obtained from an enclosure of
    K at `precision` fractional bits. The rational parts are shared between
    refinements of the same series.
    """

    constant_name: str = ""

    def __init__(self, name: str, precision: int, _rationals: Optional[dict] = None):
        super().__init__(name=name, exact=False, precision=precision)
        self._shared = _rationals if _rationals is not None else {"r": [], "sums": [], "lock": threading.RLock()}
        self._constant = constant_enclosure(self.constant_name, precision)

    @abstractmethod
    def rational_part(self, k: int) -> Fraction:
        """r_k, the coefficient divided by the constant."""

    def _rational(self, k: int) -> tuple[Fraction, Fraction]:
        parts, sums = self._shared["r"], self._shared["sums"]
        with self._shared["lock"]:
            while len(parts) < k:
                value = self.rational_part(len(parts) + 1)
                parts.append(value)
                sums.append((sums[-1] if sums else ZERO) + value)
        return parts[k - 1], sums[k - 1]

    def _compute_coefficient(self, k: int) -> Scalar:
        value, _ = self._rational(k)
        with working_precision(self.precision):
            return self._constant * enclose(value)

    def _extend(self, k: int):
        with working_precision(self.precision):
            while len(self._coefficients) < k:
                index = len(self._coefficients) + 1
                value, running = self._rational(index)
                self._partial_sums.append(clip(self._constant * enclose(running)))
                self._coefficients.append(self._constant * enclose(value))

    def refined(self, bits: int) -> "ScaledSeries":
        if bits <= self.precision:
            return self
        return type(self)(precision=bits, _rationals=self._shared)


def format_fraction(value: Fraction) -> str:
    """Render a rational as "a/b", or "a" for integers."""
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


