"""Coefficient-level combinators: composition, product with complement, convex combination."""

from fractions import Fraction
from typing import Optional

from coinfactory.series.coefficients import ZERO
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.coefficients import SeriesKind
from coinfactory.series.coefficients import format_fraction
from coinfactory.series.interval import Scalar
from coinfactory.series.interval import clip
from coinfactory.series.interval import is_tracked
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)


class CombinatorSeries(CoefficientSeries):
    """A series built from child series; tracked if any child is tracked."""

    kind = SeriesKind.COMBINATOR

    def __init__(self, name: str, children: tuple[CoefficientSeries, ...]):
        self.children = children
        exact = all(child.exact for child in children)
        precisions = [child.precision for child in children if child.precision is not None]
        super().__init__(name=name, exact=exact, precision=min(precisions) if precisions else None)

    def _finish_partial_sum(self, running: Scalar) -> Scalar:
        if is_tracked(running):
            return clip(running)
        return running


class ProductComplementSeries(CombinatorSeries):
    """g(p) = 1 - (1 - f1(p)) (1 - f2(p)); c_k = sum_{i+j=k} c1_i c2_j."""

    def __init__(self, first: CoefficientSeries, second: CoefficientSeries):
        self.first = first
        self.second = second
        super().__init__(name=f"pc({first.name},{second.name})", children=(first, second))

    def _compute_coefficient(self, k: int) -> Scalar:
        total = self.lift(ZERO)
        for i in range(1, k):
            total = total + self.lift(self.first.coefficient_at(i)) * self.lift(self.second.coefficient_at(k - i))
        return total

    @property
    def terminal_index(self) -> Optional[int]:
        if self.first.terminal_index is None or self.second.terminal_index is None:
            return None
        return self.first.terminal_index + self.second.terminal_index

    def refined(self, bits: int) -> CoefficientSeries:
        if self.exact:
            return self
        return ProductComplementSeries(self.first.refined(bits), self.second.refined(bits))


class ConvexCombinationSeries(CombinatorSeries):
    """h(p) = alpha f1(p) + (1 - alpha) f2(p); c_k = alpha c1_k + (1 - alpha) c2_k."""

    def __init__(self, first: CoefficientSeries, second: CoefficientSeries, alpha: Fraction):
        alpha = Fraction(alpha)
        if not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in the open interval (0, 1), got {alpha}")
        self.first = first
        self.second = second
        self.alpha = alpha
        super().__init__(
            name=f"convex({first.name},{second.name},alpha={format_fraction(alpha)})",
            children=(first, second),
        )

    def _compute_coefficient(self, k: int) -> Scalar:
        first, second = self.lift(self.first.coefficient_at(k)), self.lift(self.second.coefficient_at(k))
        return self.lift(self.alpha) * first + self.lift(1 - self.alpha) * second

    @property
    def terminal_index(self) -> Optional[int]:
        if self.first.terminal_index is None or self.second.terminal_index is None:
            return None
        return max(self.first.terminal_index, self.second.terminal_index)

    def refined(self, bits: int) -> CoefficientSeries:
        if self.exact:
            return self
        return ConvexCombinationSeries(self.first.refined(bits), self.second.refined(bits), self.alpha)


class CompositionSeries(CombinatorSeries):
    """f(p) = f2(f1(p)), the outer series applied to the inner one.

    With g(q) = sum_i c1_i q^i and q = 1 - p, the composition satisfies
    1 - f(p) = sum_j c2_j g(q)^j, so c_k = sum_{j<=k} c2_j [q^k] g(q)^j.
    Every factor of g has degree >= 1, hence the coefficients up to degree
    `order` only involve the inner series truncated at `order` and are exact.
    Indices beyond the current order are served by recomputing at twice the
    order.
    """

    def __init__(self, inner: CoefficientSeries, outer: CoefficientSeries, order: int):
        if order < 1:
            raise ValueError(f"order must be at least 1, got {order}")
        self.inner = inner
        self.outer = outer
        self.order = order
        self._block: list[Scalar] = []
        super().__init__(name=f"compose({inner.name},{outer.name},order={order})", children=(inner, outer))

    def _convolve(self, order: int) -> list[Scalar]:
        zero = self.lift(ZERO)
        inner = [zero] + [self.lift(self.inner.coefficient_at(i)) for i in range(1, order + 1)]
        result = [zero] * (order + 1)
        power = list(inner)  # g^j truncated at `order`, j = 1
        for j in range(1, order + 1):
            weight = self.lift(self.outer.coefficient_at(j))
            for degree in range(j, order + 1):
                result[degree] = result[degree] + weight * power[degree]
            if j == order:
                break
            following = [zero] * (order + 1)
            for left in range(j, order + 1):
                if self.exact and power[left] == 0:
                    continue
                for right in range(1, order + 1 - left):
                    following[left + right] = following[left + right] + power[left] * inner[right]
            power = following
        return result[1:]

    def _compute_coefficient(self, k: int) -> Scalar:
        if k > len(self._block):
            order = self.order
            while order < k:
                order *= 2
            if self._block:
                logger.info(f"Extending {self.name} to order {order}")
            self._block = self._convolve(order)
        return self._block[k - 1]

    @property
    def terminal_index(self) -> Optional[int]:
        if self.inner.terminal_index is None or self.outer.terminal_index is None:
            return None
        return self.inner.terminal_index * self.outer.terminal_index

    def refined(self, bits: int) -> CoefficientSeries:
        if self.exact:
            return self
        return CompositionSeries(self.inner.refined(bits), self.outer.refined(bits), self.order)


def compose(inner: CoefficientSeries, outer: CoefficientSeries, order: int) -> CoefficientSeries:
    """Series of f2(f1(p)) with f1 = inner and f2 = outer, exact up to `order` eagerly."""
    return CompositionSeries(inner, outer, order)


def product_complement(c1: CoefficientSeries, c2: CoefficientSeries) -> CoefficientSeries:
    """Series of 1 - (1 - f1(p)) (1 - f2(p)) (Cauchy convolution of the coefficients)."""
    return ProductComplementSeries(c1, c2)


def convex_combination(c1: CoefficientSeries, c2: CoefficientSeries, alpha: Fraction) -> CoefficientSeries:
    """Series of alpha f1(p) + (1 - alpha) f2(p) for alpha in (0, 1)."""
    return ConvexCombinationSeries(c1, c2, alpha)
