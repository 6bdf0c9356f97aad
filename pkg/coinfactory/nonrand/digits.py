"""Binary digits of the stopping probabilities d_k."""

import threading
from enum import Enum
from fractions import Fraction
from typing import Optional

from coinfactory.series.interval import lower
from coinfactory.series.interval import upper
from coinfactory.series.stopping import StoppingSequence
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import InsufficientPrecisionError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

# extra bits requested beyond the digit position before each refinement
GUARD_BITS = 32


class DyadicConvention(str, Enum):
    """Which of the two expansions of a dyadic d in (0, 1) to use.

    0.75 is 0.11000... under ZEROS and 0.10111... under ONES. The value 1 is
    always 0.111... and the value 0 always 0.000...
    """

    ZEROS = "zeros"
    ONES = "ones"


def _dyadic_exponent(value: Fraction) -> Optional[int]:
    denominator = value.denominator
    if denominator & (denominator - 1):
        return None
    return denominator.bit_length() - 1


class DigitOracle:
    """Digit j (j >= 1) of the fractional binary expansion of d_k.

    Exact stopping probabilities are expanded by long division. Interval
    enclosures are refined until floor(d_k 2^j) is certain; the underlying
    sequence escalates its precision up to its ceiling and raises
    `InsufficientPrecisionError` beyond it.

    Args:
        stopping (StoppingSequence): The d_k.
        convention (DyadicConvention): Expansion used for dyadic d_k.
        precision_ceiling (int, optional): Highest digit position resolvable
            for interval-valued d_k.
    """

    def __init__(
        self,
        stopping: StoppingSequence,
        convention: DyadicConvention = DyadicConvention.ZEROS,
        precision_ceiling: Optional[int] = None,
    ):
        self.stopping = stopping
        self.convention = DyadicConvention(convention)
        self.precision_ceiling = precision_ceiling or get_settings().digit_ceiling
        self._digits: dict[tuple[int, int], int] = {}
        self._lock = threading.Lock()

    def _exact(self, k: int) -> Optional[Fraction]:
        if not self.stopping.exact:
            return None
        return Fraction(self.stopping.d_at(k))

    def dyadic_tail_start(self, k: int) -> Optional[tuple[int, int]]:
        """(m, r) when every digit of d_k from position m on equals r, else None."""
        value = self._exact(k)
        if value is None:
            return None
        if value >= 1:
            return 1, 1
        if value <= 0:
            return 1, 0
        exponent = _dyadic_exponent(value)
        if exponent is None:
            return None
        return exponent + 1, 0 if self.convention == DyadicConvention.ZEROS else 1

    def _exact_digit(self, value: Fraction, j: int) -> int:
        if value >= 1:
            return 1
        if self.convention == DyadicConvention.ONES:
            exponent = _dyadic_exponent(value)
            if exponent is not None and value > 0:
                # a / 2^e with a odd becomes (a - 1) / 2^e followed by ones
                if j > exponent:
                    return 1
                if j == exponent:
                    return 0
        return ((value.numerator << j) // value.denominator) & 1

    def _interval_digit(self, k: int, j: int) -> int:
        if j + GUARD_BITS > self.precision_ceiling:
            raise InsufficientPrecisionError(
                f"Digit {j} of d_{k} lies beyond the ceiling of {self.precision_ceiling} bits",
            )
        bits = j + GUARD_BITS
        while True:
            enclosure = self.stopping.bounds(k, bits)
            lo, hi = lower(enclosure), upper(enclosure)
            low = (lo.numerator << j) // lo.denominator
            high = (hi.numerator << j) // hi.denominator
            if low == high:
                return low & 1
            if bits >= self.precision_ceiling:
                raise InsufficientPrecisionError(
                    f"Digit {j} of d_{k} is undecided at the ceiling of {self.precision_ceiling} bits",
                )
            bits = min(bits * 2, self.precision_ceiling)
            logger.debug(f"Refining d_{k} to {bits} bits for digit {j}")

    def digit_at(self, k: int, j: int) -> int:
        """The j-th fractional binary digit of d_k."""
        if j < 1:
            raise IndexError(f"Digit positions start at 1, got {j}")
        key = (k, j)
        digit = self._digits.get(key)
        if digit is not None:
            return digit
        value = self._exact(k)
        digit = self._exact_digit(value, j) if value is not None else self._interval_digit(k, j)
        with self._lock:
            self._digits[key] = digit
        return digit

    def digits(self, k: int, count: int) -> list[int]:
        """The first `count` digits of d_k."""
        return [self.digit_at(k, j) for j in range(1, count + 1)]


def digit_oracle_from(
    d: StoppingSequence,
    convention: DyadicConvention = DyadicConvention.ZEROS,
    precision_ceiling: Optional[int] = None,
) -> DigitOracle:
    """A memoised digit oracle over a stopping sequence."""
    return DigitOracle(d, convention=convention, precision_ceiling=precision_ceiling)
