"""Test the stopping probabilities d_k and the inverse transform."""

import math
from fractions import Fraction

import pytest

from coinfactory.series.catalog import Log2SqrtSeries
from coinfactory.series.catalog import catalog
from coinfactory.series.interval import midpoint
from coinfactory.series.interval import width
from coinfactory.series.stopping import StoppingSequence
from coinfactory.series.stopping import coefficients_from_stopping
from coinfactory.series.stopping import stopping_from_coefficients
from coinfactory.utils.errors import InconsistentSeriesError
from coinfactory.utils.errors import InsufficientPrecisionError


@pytest.mark.parametrize("closed_form", [True, False])
def test_sqrt_stopping_probabilities(sqrt_series, closed_form):
    """Test d_k = 1 / (2k) with and without the closed form."""

    # ACT
    stopping = stopping_from_coefficients(sqrt_series, closed_form=closed_form)

    # ASSERT
    for k in range(1, 40):
        assert stopping.d_at(k) == Fraction(1, 2 * k)


def test_entropy_never_stops_first(entropy_series):
    """Test d_1 = 0 and d_k = 1 / k afterwards."""

    # ACT
    stopping = stopping_from_coefficients(entropy_series, closed_form=False)

    # ASSERT
    assert stopping.d_at(1) == 0
    assert [stopping.d_at(k) for k in range(2, 6)] == [Fraction(1, k) for k in range(2, 6)]


def test_finite_series_terminates():
    """Test d_K = 1 at the terminal index and no d_k beyond it."""

    # ARRANGE
    series = catalog("finite", [Fraction(1, 4), Fraction(3, 4)])

    # ACT
    stopping = stopping_from_coefficients(series)

    # ASSERT
    assert stopping.terminal_index == 2
    assert stopping.d_at(1) == Fraction(1, 4)
    assert stopping.d_at(2) == 1
    with pytest.raises(IndexError):
        stopping.d_at(3)


@pytest.mark.parametrize(
    "expression",
    [
        ("sqrt", None),
        ("power", {"a": Fraction(1, 3)}),
        ("mobius_sqrt", None),
        ("entropy", None),
        ("finite", [Fraction(1, 8), 0, Fraction(5, 8), Fraction(1, 4)]),
    ],
)
def test_round_trip_is_exact(expression):
    """Test that c -> d -> c reproduces every coefficient exactly."""

    # ARRANGE
    series = catalog(*expression)

    # ACT
    rebuilt = coefficients_from_stopping(stopping_from_coefficients(series, closed_form=False))

    # ASSERT
    assert rebuilt.coefficients(64) == series.coefficients(64)
    assert rebuilt.terminal_index == series.terminal_index


def test_explicit_stopping_sequence():
    """Test the coefficients rebuilt from d_k = 1 / (k + 1)."""

    # ARRANGE
    stopping = StoppingSequence(d_function=lambda k: Fraction(1, k + 1))

    # ACT
    series = coefficients_from_stopping(stopping)

    # ASSERT
    assert series.name == "from_stopping"
    assert series.coefficients(6) == [Fraction(1, k * (k + 1)) for k in range(1, 7)]
    assert stopping.exact


def test_explicit_value_must_be_a_probability():
    """Test that d_k outside [0, 1] is rejected."""

    # ARRANGE
    stopping = StoppingSequence(d_function=lambda k: Fraction(3, 2))

    # ASSERT
    with pytest.raises(InconsistentSeriesError):
        stopping.d_at(1)


@pytest.mark.parametrize(
    "options",
    [
        {},
        {"source": catalog("sqrt"), "d_function": lambda k: Fraction(1, 2)},
    ],
)
def test_exactly_one_definition(options):
    """Test that a stopping sequence needs either a series or a function."""

    with pytest.raises(ValueError):
        StoppingSequence(**options)


def test_bracket_of_exact_value(sqrt_series):
    """Test the scaled floor and ceiling of an exact d_k."""

    # ARRANGE
    stopping = stopping_from_coefficients(sqrt_series)

    # ASSERT
    assert stopping.bracket(1, 4) == (8, 8)
    assert stopping.bracket(3, 4) == (2, 3)


def test_tracked_bounds_refine_on_demand():
    """Test that asking for more bits than the working precision refines the series."""

    # ARRANGE
    stopping = stopping_from_coefficients(catalog("log2_sqrt"))
    first = 1 / (4 * math.log(2))

    # ACT
    enclosure = stopping.bounds(1, 300)

    # ASSERT
    assert not stopping.exact
    assert width(enclosure) <= Fraction(1, 2**300)
    assert stopping.precision >= 512
    assert abs(float(midpoint(enclosure)) - first) < 1e-15


def test_precision_ceiling():
    """Test that refinement stops at the configured ceiling."""

    # ARRANGE
    stopping = StoppingSequence(source=Log2SqrtSeries(precision=64), precision_ceiling=64)

    # ASSERT
    with pytest.raises(InsufficientPrecisionError):
        stopping.bounds(1, 100)
