"""Test finite coefficient series and the memoised series base."""

from fractions import Fraction

import pytest

from coinfactory.series.coefficients import FiniteSeries
from coinfactory.series.coefficients import SeriesKind
from coinfactory.series.coefficients import format_fraction
from coinfactory.utils.errors import InconsistentSeriesError


def test_valid_finite_series():
    """Test a finite series and its partial sums."""

    # ACT
    series = FiniteSeries([Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)])

    # ASSERT
    assert series.name == "finite:[1/4,1/4,1/2]"
    assert series.kind == SeriesKind.FINITE
    assert series.terminal_index == 3
    assert series.partial_sum_at(0) == 0
    assert series.partial_sum_at(2) == Fraction(1, 2)
    assert series.remaining_mass(3) == 0
    assert series.coefficient_at(10) == 0


def test_trailing_zeros_are_trimmed():
    """Test that trailing zero coefficients do not move the terminal index."""

    # ACT
    series = FiniteSeries([1, 0, 0])

    # ASSERT
    assert series.name == "finite:[1]"
    assert series.terminal_index == 1


@pytest.mark.parametrize(
    "values",
    [
        [],
        [0, 0],
        [Fraction(1, 2)],
        [Fraction(1, 2), Fraction(3, 4)],
        [Fraction(-1, 2), Fraction(3, 2)],
    ],
)
def test_invalid_finite_series(values):
    """Test that lists not forming a distribution are rejected."""

    with pytest.raises(InconsistentSeriesError):
        FiniteSeries(values)


@pytest.mark.parametrize("k", [0, -1])
def test_coefficient_index_starts_at_one(k):
    """Test that coefficient indices below 1 are rejected."""

    # ARRANGE
    series = FiniteSeries([1])

    # ASSERT
    with pytest.raises(IndexError):
        series.coefficient_at(k)


def test_coefficients_prefix(sqrt_series):
    """Test that coefficients(count) returns the memoised prefix."""

    # ACT
    prefix = sqrt_series.coefficients(5)

    # ASSERT
    assert len(prefix) == 5
    assert prefix[2] == sqrt_series.coefficient_at(3)
    assert sqrt_series.coefficients(0) == []
    assert sqrt_series.remaining_mass(2) == 1 - Fraction(1, 2) - Fraction(1, 8)


@pytest.mark.parametrize(
    "value,expected",
    [
        (Fraction(3), "3"),
        (Fraction(2, 6), "1/3"),
        (Fraction(0), "0"),
    ],
)
def test_format_fraction(value, expected):
    """Test the rendering of rationals in names."""

    assert format_fraction(value) == expected
