"""Built-in functions f(p) with known expansions f(p) = 1 - sum_k c_k (1-p)^k."""

import math
from fractions import Fraction
from math import comb
from math import factorial
from typing import Any
from typing import Callable
from typing import Optional
from typing import Union

import numpy as np

from coinfactory.series.coefficients import ZERO
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.coefficients import FiniteSeries
from coinfactory.series.coefficients import ScaledSeries
from coinfactory.series.coefficients import format_fraction
from coinfactory.utils.config import get_settings


def _power_floats(a: float, stop: int) -> np.ndarray:
    ks = np.arange(2, stop + 1, dtype=float)
    return a * np.cumprod(np.concatenate(([1.0], (ks - 1.0 - a) / ks)))


class FloatCatalogMixin:
    """Marks catalog entries whose float_coefficients are vectorised recurrences."""

    @property
    def has_fast_floats(self) -> bool:
        return True


def to_fraction(value: Any) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float literal."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        value = repr(value)
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as conversion_exception:
        raise ValueError(f"Not a rational number: {value!r}") from conversion_exception


class PowerSeries(FloatCatalogMixin, CoefficientSeries):
    """f(p) = p^a, c_k = (1-a)^(k-1) a / k! with the rising factorial."""

    def __init__(self, a: Fraction):
        a = to_fraction(a)
        if not 0 < a < 1:
            raise ValueError(f"power exponent must lie in (0, 1), got {a}")
        self.a = a
        super().__init__(name=f"power:a={format_fraction(a)}")

    def _compute_coefficient(self, k: int) -> Fraction:
        if k == 1:
            return self.a
        # c_k / c_{k-1} = (k - 1 - a) / k
        return self._coefficients[k - 2] * (k - 1 - self.a) / k

    def closed_form_stopping(self, k: int) -> Fraction:
        return self.a / k

    def float_coefficients(self, stop: int) -> np.ndarray:
        return _power_floats(float(self.a), stop)


class SqrtSeries(FloatCatalogMixin, CoefficientSeries):
    """f(p) = sqrt(p), c_k = binom(2k-2, k-1) / (2^(2k-1) k)."""

    def __init__(self):
        super().__init__(name="sqrt")

    def _compute_coefficient(self, k: int) -> Fraction:
        return Fraction(comb(2 * k - 2, k - 1), 2 ** (2 * k - 1) * k)

    def closed_form_stopping(self, k: int) -> Fraction:
        return Fraction(1, 2 * k)

    def float_coefficients(self, stop: int) -> np.ndarray:
        return _power_floats(0.5, stop)


class MobiusSqrtSeries(FloatCatalogMixin, CoefficientSeries):
    """f(p) = 2 sqrt(p) / (1 + sqrt(p)); c_k is twice the sqrt coefficient at k+1."""

    def __init__(self):
        super().__init__(name="mobius_sqrt")

    def _compute_coefficient(self, k: int) -> Fraction:
        return Fraction(comb(2 * k, k), 4**k * (k + 1))

    def closed_form_stopping(self, k: int) -> Fraction:
        return Fraction(1, 2 * (k + 1))

    def float_coefficients(self, stop: int) -> np.ndarray:
        return 2.0 * _power_floats(0.5, stop + 1)[1:]


class EntropySeries(FloatCatalogMixin, CoefficientSeries):
    """f(p) = p (1 - log p); c_1 = 0 and c_k = 1 / (k (k-1)) for k >= 2."""

    def __init__(self):
        super().__init__(name="entropy")

    def _compute_coefficient(self, k: int) -> Fraction:
        if k == 1:
            return ZERO
        return Fraction(1, k * (k - 1))

    def closed_form_stopping(self, k: int) -> Fraction:
        return ZERO if k == 1 else Fraction(1, k)

    def float_coefficients(self, stop: int) -> np.ndarray:
        ks = np.arange(2, stop + 1, dtype=float)
        return np.concatenate(([0.0], 1.0 / (ks * (ks - 1.0))))


class Log2SqrtSeries(FloatCatalogMixin, ScaledSeries):
    """f(p) = log2(1 + sqrt(p)); c_k = binom(2k, k) / (2^(2k+1) k log 2)."""

    constant_name = "inv_log2"

    def __init__(self, precision: Optional[int] = None, _rationals: Optional[dict] = None):
        super().__init__(
            name="log2_sqrt",
            precision=precision or get_settings().precision_bits,
            _rationals=_rationals,
        )

    def rational_part(self, k: int) -> Fraction:
        return Fraction(comb(2 * k, k), 2 ** (2 * k + 1) * k)

    def float_coefficients(self, stop: int) -> np.ndarray:
        ks = np.arange(1, stop + 1, dtype=float)
        # binom(2k, k) / 4^k = prod_{j<=k} (2j - 1) / (2j)
        central = np.cumprod((2.0 * ks - 1.0) / (2.0 * ks))
        return central / (2.0 * ks) / math.log(2.0)


class ExpSqrtSeries(FloatCatalogMixin, ScaledSeries):
    """f(p) = (1 - exp(-sqrt(p))) / (1 - 1/e); c_k = y_{k-1}(1) / ((e-1) 2^k k!).

    y_j are the Bessel polynomials evaluated at 1:
    y_{-1} = y_0 = 1 and y_j = (2j - 1) y_{j-1} + y_{j-2}.
    """

    constant_name = "inv_e_minus_1"

    def __init__(self, precision: Optional[int] = None, _rationals: Optional[dict] = None):
        super().__init__(
            name="exp_sqrt",
            precision=precision or get_settings().precision_bits,
            _rationals=_rationals,
        )
        self._shared.setdefault("bessel", [1, 1])

    def bessel_at_one(self, j: int) -> int:
        """y_j(1) for j >= -1."""
        values = self._shared["bessel"]  # values[i] holds y_{i-1}(1)
        with self._shared["lock"]:
            while len(values) < j + 2:
                order = len(values) - 1
                values.append((2 * order - 1) * values[-1] + values[-2])
        return values[j + 1]

    def rational_part(self, k: int) -> Fraction:
        return Fraction(self.bessel_at_one(k - 1), 2**k * factorial(k))

    def float_coefficients(self, stop: int) -> np.ndarray:
        cached = self._shared.get("floats")
        if cached is not None and len(cached) >= stop:
            return cached[:stop]
        # rho_j = y_j(1) / y_{j-1}(1) stays near 2j - 1, so the ratios are well scaled
        rho = np.empty(stop)
        rho[0] = 1.0
        for j in range(1, stop):
            rho[j] = (2 * j - 1) + 1.0 / rho[j - 1]
        ks = np.arange(1, stop + 1, dtype=float)
        rational = 0.5 * np.cumprod(np.concatenate(([1.0], rho[1:] / (2.0 * ks[1:]))))
        floats = rational / math.expm1(1.0)
        self._shared["floats"] = floats
        return floats


CatalogParams = Union[None, dict, list, tuple]

_ENTRIES: dict[str, Callable[..., CoefficientSeries]] = {
    "sqrt": SqrtSeries,
    "mobius_sqrt": MobiusSqrtSeries,
    "log2_sqrt": Log2SqrtSeries,
    "exp_sqrt": ExpSqrtSeries,
    "entropy": EntropySeries,
}

CATALOG_NAMES = ("power", *_ENTRIES, "finite")


def catalog(entry: str, params: CatalogParams = None) -> CoefficientSeries:
    """Build a catalog series by name.

    Args:
        entry (str): One of power, sqrt, mobius_sqrt, log2_sqrt, exp_sqrt,
            entropy or finite.
        params: `{"a": value}` (or `[value]`) for power, the coefficient
            list for finite, nothing for the others.

    Returns:
        CoefficientSeries: The series.
    """
    if entry == "power":
        if isinstance(params, dict):
            if set(params) != {"a"}:
                raise ValueError(f"power takes exactly one parameter 'a', got {sorted(params)}")
            return PowerSeries(params["a"])
        if isinstance(params, (list, tuple)) and len(params) == 1:
            return PowerSeries(params[0])
        raise ValueError("power requires the parameter a")

    if entry == "finite":
        if not isinstance(params, (list, tuple)):
            raise ValueError("finite requires a coefficient list")
        return FiniteSeries([to_fraction(value) for value in params])

    if entry not in _ENTRIES:
        raise ValueError(f"Unknown catalog entry: {entry!r} (expected one of {', '.join(CATALOG_NAMES)})")
    if params:
        raise ValueError(f"{entry} takes no parameters")
    return _ENTRIES[entry]()
