"""Test the iv enclosures and the catalog constants."""

import math
import threading
from fractions import Fraction

import pytest
from mpmath import iv

from coinfactory.series.interval import clip
from coinfactory.series.interval import constant_enclosure
from coinfactory.series.interval import enclose
from coinfactory.series.interval import is_tracked
from coinfactory.series.interval import lower
from coinfactory.series.interval import midpoint
from coinfactory.series.interval import upper
from coinfactory.series.interval import width
from coinfactory.series.interval import working_precision


def test_enclose_rationals():
    """Test that a non-dyadic rational is enclosed by a tight outward-rounded interval."""

    # ACT
    with working_precision(64):
        third = enclose(Fraction(1, 3))
        half = enclose(Fraction(1, 2))

    # ASSERT
    assert is_tracked(third)
    assert lower(third) < Fraction(1, 3) < upper(third)
    assert width(third) <= Fraction(1, 2**90)
    assert lower(half) == upper(half) == Fraction(1, 2)
    assert enclose(half) is half


def test_endpoints_of_exact_values():
    """Test that exact rationals are their own endpoints."""

    assert lower(Fraction(1, 3)) == upper(Fraction(1, 3)) == Fraction(1, 3)
    assert width(Fraction(2, 7)) == 0
    assert not is_tracked(Fraction(1, 3))


def test_tracked_arithmetic_encloses():
    """Test that iv arithmetic keeps the exact result inside."""

    # ACT
    with working_precision(64):
        value = (enclose(Fraction(1, 3)) + enclose(Fraction(1, 7))) / enclose(Fraction(5, 11))

    # ASSERT
    exact = (Fraction(1, 3) + Fraction(1, 7)) * Fraction(11, 5)
    assert lower(value) <= exact <= upper(value)
    assert float(midpoint(value)) == pytest.approx(float(exact), rel=1e-15)


def test_clip():
    """Test intersection with the unit interval."""

    # ARRANGE
    interval = iv.mpf(["-0.25", "0.75"])
    above = iv.mpf(["0.5", "1.5"])

    # ASSERT
    assert (lower(clip(interval)), upper(clip(interval))) == (0, Fraction(3, 4))
    assert (lower(clip(above)), upper(clip(above))) == (Fraction(1, 2), 1)


def test_negative_endpoints():
    """Test that negative endpoints convert with their sign."""

    # ARRANGE
    interval = iv.mpf(["-2.5", "-0.125"])

    # ASSERT
    assert lower(interval) == Fraction(-5, 2)
    assert upper(interval) == Fraction(-1, 8)


def test_working_precision_is_restored():
    """Test that the iv precision is reset after a tracked computation."""

    # ARRANGE
    before = iv.prec

    # ACT
    with working_precision(200):
        inside = iv.prec

    # ASSERT
    assert inside > 200
    assert iv.prec == before


def test_working_precision_under_threads():
    """Test that concurrent computations at different precisions do not interfere."""

    # ARRANGE
    widths: dict[int, list[Fraction]] = {64: [], 512: []}

    def work(bits: int):
        for _ in range(50):
            with working_precision(bits):
                widths[bits].append(width(enclose(Fraction(1, 3))))

    threads = [threading.Thread(target=work, args=(bits,)) for bits in (64, 512, 64, 512)]

    # ACT
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    # ASSERT
    assert len(set(widths[64])) == 1
    assert len(set(widths[512])) == 1
    assert widths[512][0] < Fraction(1, 2**500) < widths[64][0]


@pytest.mark.parametrize(
    "name,value",
    [
        ("inv_log2", 1 / math.log(2)),
        ("inv_e_minus_1", 1 / math.expm1(1)),
    ],
)
@pytest.mark.parametrize("bits", [40, 256])
def test_constant_enclosure(name, value, bits):
    """Test that the enclosures contain the constants and have the advertised width."""

    # ACT
    enclosure = constant_enclosure(name, bits)

    # ASSERT
    assert is_tracked(enclosure)
    assert width(enclosure) <= Fraction(1, 2**bits)
    assert abs(float(midpoint(enclosure)) - value) < 1e-15
    assert lower(enclosure) < Fraction(value) + Fraction(1, 2**50)
    assert upper(enclosure) > Fraction(value) - Fraction(1, 2**50)


def test_unknown_constant():
    """Test that only the catalog constants are available."""

    with pytest.raises(KeyError):
        constant_enclosure("pi", 64)
