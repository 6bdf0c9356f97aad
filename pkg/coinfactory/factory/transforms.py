"""Factory-level transforms: complements, scaling, products and chaining.

Each transform wraps one or two factories and is itself a `Factory`, so
transforms nest. References (exact Pr[Y = 1] and E[N]) are propagated from
the wrapped factories.
"""

from fractions import Fraction
from typing import Optional

from coinfactory.analysis.evaluate import DEFAULT_TOLERANCE
from coinfactory.analysis.models.result import EvalResult
from coinfactory.analysis.models.result import Reference
from coinfactory.factory.models.outcome import FactoryOutcome
from coinfactory.factory.sampler import Factory
from coinfactory.factory.sources import CoinSource
from coinfactory.factory.sources import FlippedCoin
from coinfactory.factory.sources import OutcomeCoin
from coinfactory.factory.sources import UniformSource
from coinfactory.series.coefficients import format_fraction


class OutputComplement(Factory):
    """Simulates 1 - f(p) by outputting 1 - Y."""

    def __init__(self, inner: Factory):
        self.inner = inner
        super().__init__(name=f"complement({inner.name})")

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        outcome = self.inner.sample(coins, uniforms)
        return outcome.model_copy(update={"y": 1 - outcome.y})

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        inner = self.inner.reference(p, tol)
        return Reference(f=inner.f.complement(), expected_n=inner.expected_n)

    def tail_bound(self, p: float, n: int) -> Optional[float]:
        return self.inner.tail_bound(p, n)


class InputComplement(Factory):
    """Simulates f(1 - p) by flipping every coin before the inner factory sees it."""

    def __init__(self, inner: Factory):
        self.inner = inner
        super().__init__(name=f"flip_input({inner.name})")

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        return self.inner.sample(FlippedCoin(coins), uniforms)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        return self.inner.reference(1.0 - p, tol)

    def tail_bound(self, p: float, n: int) -> Optional[float]:
        return self.inner.tail_bound(1.0 - p, n)


class Scale(Factory):
    """Simulates alpha f(p) by multiplying Y with an independent Bernoulli(alpha).

    The alpha-coin is flipped first, from the uniform source; when it comes up
    0 the inner factory is not run and the outcome has n = 0. This lowers E[N]
    to alpha times the inner cost without changing the law of Y.

    Args:
        inner (Factory): The factory of f.
        alpha (Fraction): The multiplier, in (0, 1].
    """

    def __init__(self, inner: Factory, alpha: Fraction):
        alpha = Fraction(alpha)
        if not 0 < alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        self.inner = inner
        self.alpha = alpha
        super().__init__(name=f"scale({inner.name},alpha={format_fraction(alpha)})")

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        draws_before = uniforms.draws
        if not uniforms.bernoulli(self.alpha):
            return FactoryOutcome(y=0, n=0, uniforms=uniforms.draws - draws_before)
        outcome = self.inner.sample(coins, uniforms)
        return outcome.model_copy(update={"uniforms": uniforms.draws - draws_before})

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        inner = self.inner.reference(p, tol)
        alpha = float(self.alpha)
        expected_n = inner.expected_n.scaled(alpha) if inner.expected_n is not None else None
        return Reference(f=inner.f.scaled(alpha), expected_n=expected_n)

    def tail_bound(self, p: float, n: int) -> Optional[float]:
        inner = self.inner.tail_bound(p, n)
        # N > n >= 0 requires the alpha-coin to be 1
        return None if inner is None else float(self.alpha) * inner


class Product(Factory):
    """Simulates f1(p) f2(p) by multiplying the outputs.

    The second factory only runs when the first one outputs 1.
    """

    def __init__(self, first: Factory, second: Factory):
        self.first = first
        self.second = second
        super().__init__(name=f"prod({first.name},{second.name})")

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        first = self.first.sample(coins, uniforms)
        if first.y == 0:
            return FactoryOutcome(y=0, n=first.n, uniforms=first.uniforms)
        second = self.second.sample(coins, uniforms)
        return FactoryOutcome(y=second.y, n=first.n + second.n, uniforms=first.uniforms + second.uniforms)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        first = self.first.reference(p, tol)
        second = self.second.reference(p, tol)
        expected_n = None
        if first.expected_n is not None and second.expected_n is not None:
            # E[N] = E[N1] + f1(p) E[N2]
            expected_n = first.expected_n.plus(first.f.times(second.expected_n))
        return Reference(f=first.f.times(second.f), expected_n=expected_n)


class Chain(Factory):
    """Simulates f2(f1(p)) by using outputs of the inner factory as the outer coins.

    N counts the original coins read by all inner runs together.
    """

    def __init__(self, inner: Factory, outer: Factory):
        self.inner = inner
        self.outer = outer
        super().__init__(name=f"chain({inner.name},{outer.name})")

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        consumed_before = coins.consumed
        draws_before = uniforms.draws
        outcome = self.outer.sample(OutcomeCoin(lambda: self.inner.sample(coins, uniforms).y), uniforms)
        return FactoryOutcome(y=outcome.y, n=coins.consumed - consumed_before, uniforms=uniforms.draws - draws_before)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        inner = self.inner.reference(p, tol)
        low, high = inner.f.lower, inner.f.upper
        if not 0.0 < low <= high < 1.0:
            raise ValueError(f"{self.inner.name} at p={p} is not separated from 0 and 1")
        ends = [self.outer.reference(value, tol) for value in sorted({low, high})]
        f = _hull([end.f for end in ends])
        expected_n = None
        if inner.expected_n is not None and all(end.expected_n is not None for end in ends):
            # Wald: E[N] = E[number of inner runs] * E[N_inner]
            expected_n = _hull([end.expected_n for end in ends]).times(inner.expected_n)
        return Reference(f=f, expected_n=expected_n)


def _hull(results: list[EvalResult]) -> EvalResult:
    return EvalResult.from_bounds(
        min(result.lower for result in results),
        max(result.upper for result in results),
        terms_used=max(result.terms_used for result in results),
    )


def transform_output_complement(inner: Factory) -> Factory:
    """Factory of 1 - f(p)."""
    return OutputComplement(inner)


def transform_input_complement(inner: Factory) -> Factory:
    """Factory of f(1 - p)."""
    return InputComplement(inner)


def transform_scale(inner: Factory, alpha: Fraction) -> Factory:
    """Factory of alpha f(p), alpha in (0, 1]."""
    return Scale(inner, alpha)


def transform_product(first: Factory, second: Factory) -> Factory:
    """Factory of f1(p) f2(p)."""
    return Product(first, second)


def transform_chain(inner: Factory, outer: Factory) -> Factory:
    """Factory of f2(f1(p)) fed by the outputs of the inner factory."""
    return Chain(inner, outer)
