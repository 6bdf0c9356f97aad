"""Test the digit oracle over stopping probabilities."""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import pytest

from coinfactory.nonrand.digits import DigitOracle
from coinfactory.nonrand.digits import DyadicConvention
from coinfactory.nonrand.digits import digit_oracle_from
from coinfactory.series.catalog import catalog
from coinfactory.series.stopping import StoppingSequence
from coinfactory.series.stopping import stopping_from_coefficients
from coinfactory.utils.errors import InsufficientPrecisionError


def _constant(value: Fraction) -> StoppingSequence:
    return StoppingSequence(d_function=lambda k: value)


@pytest.mark.parametrize(
    "value,convention,expected",
    [
        (Fraction(1, 3), DyadicConvention.ZEROS, [0, 1, 0, 1, 0, 1]),
        (Fraction(3, 4), DyadicConvention.ZEROS, [1, 1, 0, 0, 0, 0]),
        (Fraction(3, 4), DyadicConvention.ONES, [1, 0, 1, 1, 1, 1]),
        (Fraction(1, 2), DyadicConvention.ONES, [0, 1, 1, 1, 1, 1]),
        (Fraction(1), DyadicConvention.ZEROS, [1, 1, 1, 1, 1, 1]),
        (Fraction(0), DyadicConvention.ONES, [0, 0, 0, 0, 0, 0]),
    ],
)
def test_exact_digits(value, convention, expected):
    """Test long-division digits under both dyadic conventions."""

    # ARRANGE
    oracle = DigitOracle(_constant(value), convention=convention)

    # ACT
    digits = oracle.digits(1, 6)

    # ASSERT
    assert digits == expected


@pytest.mark.parametrize(
    "value,convention,expected",
    [
        (Fraction(3, 4), DyadicConvention.ZEROS, (3, 0)),
        (Fraction(3, 4), DyadicConvention.ONES, (3, 1)),
        (Fraction(1, 2), DyadicConvention.ZEROS, (2, 0)),
        (Fraction(1), DyadicConvention.ZEROS, (1, 1)),
        (Fraction(0), DyadicConvention.ONES, (1, 0)),
        (Fraction(1, 3), DyadicConvention.ZEROS, None),
    ],
)
def test_dyadic_tail_start(value, convention, expected):
    """Test where the constant digit tail of a dyadic value begins."""

    # ARRANGE
    oracle = DigitOracle(_constant(value), convention=convention)

    # ASSERT
    assert oracle.dyadic_tail_start(1) == expected


def test_digit_positions_start_at_one(sqrt_series):
    """Test that digit 0 does not exist."""

    # ARRANGE
    oracle = digit_oracle_from(stopping_from_coefficients(sqrt_series))

    # ASSERT
    with pytest.raises(IndexError):
        oracle.digit_at(1, 0)


def test_sqrt_digits(sqrt_series):
    """Test digits of d_k = 1 / (2k) for sqrt."""

    # ARRANGE
    oracle = digit_oracle_from(stopping_from_coefficients(sqrt_series))

    # ASSERT
    assert oracle.digits(1, 4) == [1, 0, 0, 0]
    assert oracle.digits(3, 6) == [0, 0, 1, 0, 1, 0]


def test_tracked_digits():
    """Test that digits of an interval-valued d_k match the value they enclose."""

    # ARRANGE
    oracle = digit_oracle_from(stopping_from_coefficients(catalog("log2_sqrt")))
    first = 1 / (4 * math.log(2))

    # ACT
    digits = oracle.digits(1, 20)

    # ASSERT
    assert digits == [int(first * 2**j) & 1 for j in range(1, 21)]
    assert oracle.dyadic_tail_start(1) is None


def test_tracked_digits_beyond_ceiling():
    """Test that digits past the precision ceiling are refused."""

    # ARRANGE
    oracle = digit_oracle_from(stopping_from_coefficients(catalog("log2_sqrt")), precision_ceiling=64)

    # ASSERT
    with pytest.raises(InsufficientPrecisionError):
        oracle.digit_at(1, 40)


def test_concurrent_digits_match_serial():
    """Test that threads sharing a tracked sequence see the serial digits and overlapping brackets."""

    # ARRANGE
    digit_keys = [(k, j) for k in range(1, 9) for j in (8, 40, 120)]
    bracket_keys = [(k, bits) for k in range(1, 9) for bits in (16, 64, 200)]
    serial = DigitOracle(stopping_from_coefficients(catalog("log2_sqrt")))
    expected_digits = {key: serial.digit_at(*key) for key in digit_keys}
    expected_brackets = {key: serial.stopping.bracket(*key) for key in bracket_keys}
    shared = DigitOracle(stopping_from_coefficients(catalog("log2_sqrt")))

    def work(offset: int):
        order = digit_keys[offset:] + digit_keys[:offset]
        digits = {key: shared.digit_at(*key) for key in order}
        brackets = {key: shared.stopping.bracket(*key) for key in reversed(bracket_keys)}
        return digits, brackets

    # ACT
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(work, range(8)))

    # ASSERT
    for digits, brackets in results:
        assert digits == expected_digits
        for key, (low, high) in brackets.items():
            serial_low, serial_high = expected_brackets[key]
            assert low <= high
            assert max(low, serial_low) <= min(high, serial_high)
