"""Enclosures of tracked-precision values, carried as `mpmath.iv` intervals.

Exact series work with `Fraction`. Series involving an irrational constant
carry `iv.mpf` values; their arithmetic is rounded outward at the working
precision, so the true value always lies inside. Endpoints are binary
floats and convert to exact rationals, which is what callers comparing
against uniforms or extracting digits need.
"""

import threading
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache
from typing import Iterator
from typing import Union

import mpmath
from mpmath import iv


# extra working bits carried beyond a series' nominal precision
GUARD_BITS = 32

# mpmath precision is global state; every tracked computation holds this lock
TRACKING_LOCK = threading.RLock()

Tracked = iv.mpf
Scalar = Union[Fraction, Tracked]


@contextmanager
def working_precision(bits: int) -> Iterator[None]:
    """Hold the tracking lock with mp and iv working at `bits` plus guard bits."""
    with TRACKING_LOCK:
        saved = iv.prec
        iv.prec = bits + GUARD_BITS
        try:
            with mpmath.mp.workprec(bits + GUARD_BITS):
                yield
        finally:
            iv.prec = saved


def is_tracked(value: Scalar) -> bool:
    return isinstance(value, Tracked)


def enclose(value: Union[int, Fraction, Tracked]) -> Tracked:
    """The value as an iv interval; rationals are rounded outward.

    Call inside `working_precision`.
    """
    if is_tracked(value):
        return value
    value = Fraction(value)
    return iv.mpf(value.numerator) / value.denominator


def _exact(endpoint) -> Fraction:
    number = mpmath.mpmathify(endpoint)
    mantissa, exponent = number.man_exp
    magnitude = Fraction(abs(int(mantissa))) * Fraction(2) ** int(exponent)
    return -magnitude if number < 0 else magnitude


def lower(value: Scalar) -> Fraction:
    """Lower endpoint as an exact rational (the value itself when exact)."""
    return _exact(value.a) if is_tracked(value) else value


def upper(value: Scalar) -> Fraction:
    """Upper endpoint as an exact rational (the value itself when exact)."""
    return _exact(value.b) if is_tracked(value) else value


def width(value: Scalar) -> Fraction:
    return upper(value) - lower(value)


def midpoint(value: Scalar) -> Fraction:
    return (lower(value) + upper(value)) / 2


def clip(value: Tracked, low: int = 0, high: int = 1) -> Tracked:
    """Intersect with [low, high]; both bounds are known a priori."""
    lo = min(max(mpmath.mpmathify(value.a), low), high)
    hi = max(min(mpmath.mpmathify(value.b), high), lo)
    return iv.mpf([lo, hi])


_CONSTANTS = {
    "inv_log2": lambda: 1 / iv.log(2),
    "inv_e_minus_1": lambda: 1 / (iv.exp(1) - 1),
}


@lru_cache(maxsize=64)
def constant_enclosure(name: str, bits: int) -> Tracked:
    """Interval of width at most 2**-bits around a catalog constant.

    Args:
        name (str): One of "inv_log2" or "inv_e_minus_1".
        bits (int): Number of fractional bits.

    Returns:
        Tracked: An enclosure of the constant.
    """
    if name not in _CONSTANTS:
        raise KeyError(f"Unknown constant: {name}")
    with working_precision(bits):
        return _CONSTANTS[name]()
