"""The randomized factory (Algorithm 1) and the two-phase baseline.

Both samplers consume a `StoppingSequence` d_k. Algorithm 1 reads one coin
per iteration and stops at the first iteration with X_i = 1 or U_i < d_i,
outputting X_i. The baseline first draws L with Pr[L = k] = c_k (sequentially,
d_k being Pr[L = k | L >= k]) and then reads exactly L coins, outputting 1
unless all of them are 0.
"""

from fractions import Fraction
from functools import partial
from typing import Optional

from coinfactory.analysis.evaluate import DEFAULT_TOLERANCE
from coinfactory.analysis.evaluate import eval_f
from coinfactory.analysis.models.result import EvalResult
from coinfactory.analysis.models.result import Reference
from coinfactory.factory.models.outcome import FactoryOutcome
from coinfactory.factory.sources import CoinSource
from coinfactory.factory.sources import UniformSource
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.stopping import StoppingSequence
from coinfactory.series.stopping import coefficients_from_stopping
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import TruncationError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)


class Factory:
    """Factory Superclass

    A factory turns a coin source (and a uniform source, for the randomized
    variants) into one Bernoulli(f(p)) output per call to `sample`.
    """

    name: str

    def __init__(self, name: str):
        if type(self) is Factory:
            raise Exception("<Factory> must be subclassed.")
        self.name = name

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        """Produce one output."""
        raise NotImplementedError("Subclasses must implement this method.")

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        """Exact Pr[Y = 1] and, when known, E[N] at p."""
        raise NotImplementedError("Subclasses must implement this method.")

    def tail_bound(self, p: float, n: int) -> Optional[float]:
        """An upper bound on Pr[N > n] at p, or None when none is known."""
        return None

    @property
    def series(self) -> Optional[CoefficientSeries]:
        """The coefficient series whose stopping law the factory follows directly."""
        return None


def draw_stop(stopping: StoppingSequence, k: int, uniforms: UniformSource) -> int:
    """V_k = 1 when U_k < d_k.

    Exact d_k in {0, 1} need no uniform. Otherwise a fresh uniform is revealed
    64 bits at a time and compared against brackets of d_k, refined (and, for
    tracked series, recomputed at a higher precision) until the order is known.
    """
    if stopping.exact:
        d = stopping.d_at(k)
        if d <= 0:
            return 0
        if d >= 1:
            return 1
    return int(uniforms.draw().below(partial(stopping.bracket, k)))


def sample_algorithm1(
    d: StoppingSequence,
    coins: CoinSource,
    uniforms: UniformSource,
    trace: bool = False,
) -> FactoryOutcome:
    """One run of the randomized factory.

    Args:
        d (StoppingSequence): Stopping probabilities of the target function.
        coins (CoinSource): The X_i.
        uniforms (UniformSource): The U_i.
        trace (bool): Record the (X_i, V_i) pair of every iteration.

    Returns:
        FactoryOutcome: Y = X_N, N and the number of uniforms drawn.
    """
    draws_before = uniforms.draws
    events: Optional[list[tuple[int, int]]] = [] if trace else None
    k = 0
    while True:
        k += 1
        x = coins.next_bit()
        v = draw_stop(d, k, uniforms)
        if events is not None:
            events.append((x, v))
        if x or v:
            return FactoryOutcome(y=x, n=k, uniforms=uniforms.draws - draws_before, trace=events)


def sample_stopping_index(d: StoppingSequence, uniforms: UniformSource, max_inputs: int) -> int:
    """L with Pr[L = k] = c_k, drawn through Pr[L = k | L >= k] = d_k."""
    k = 0
    while True:
        k += 1
        if draw_stop(d, k, uniforms):
            return k
        if k >= max_inputs:
            raise TruncationError(f"L exceeded the cap of {max_inputs} inputs", cap=max_inputs)


def sample_wastlund_baseline(
    d: StoppingSequence,
    coins: CoinSource,
    uniforms: UniformSource,
    max_inputs: Optional[int] = None,
) -> FactoryOutcome:
    """One run of the two-phase baseline: draw L, then read L coins.

    Args:
        d (StoppingSequence): Stopping probabilities of the target function.
        coins (CoinSource): The X_i.
        uniforms (UniformSource): Randomness for L.
        max_inputs (int, optional): Cap on L; defaults to the configured
            baseline cap.

    Raises:
        TruncationError: L would exceed the cap. No coin has been read.
    """
    max_inputs = max_inputs or get_settings().baseline_cap
    draws_before = uniforms.draws
    length = sample_stopping_index(d, uniforms, max_inputs)
    y = int(any(coins.take(length)))
    return FactoryOutcome(y=y, n=length, uniforms=uniforms.draws - draws_before)


def series_of(stopping: StoppingSequence) -> CoefficientSeries:
    """The series a stopping sequence was derived from, rebuilt when it was given directly."""
    if stopping.source is not None:
        return stopping.source
    return coefficients_from_stopping(stopping)


class Algorithm1Factory(Factory):
    """The randomized factory for one stopping sequence.

    Args:
        stopping (StoppingSequence): d_k of the target function.
        trace (bool): Attach the (X_i, V_i) trace to every outcome.
    """

    def __init__(self, stopping: StoppingSequence, trace: bool = False):
        self.stopping = stopping
        self.trace = trace
        super().__init__(name=stopping.source.name if stopping.source is not None else "stopping")

    @property
    def series(self) -> CoefficientSeries:
        return series_of(self.stopping)

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        return sample_algorithm1(self.stopping, coins, uniforms, trace=self.trace)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        f = eval_f(self.stopping, p, tol)
        # E[N] = f(p) / p
        return Reference(f=f, expected_n=f.scaled(1.0 / p))

    def tail_bound(self, p: float, n: int) -> float:
        # N > n requires X_1 = ... = X_n = 0
        return (1.0 - p) ** n


class WastlundFactory(Factory):
    """The two-phase baseline for one stopping sequence.

    Args:
        stopping (StoppingSequence): d_k of the target function.
        max_inputs (int, optional): Cap on L, defaults to the configured cap.
    """

    def __init__(self, stopping: StoppingSequence, max_inputs: Optional[int] = None):
        self.stopping = stopping
        self.max_inputs = max_inputs or get_settings().baseline_cap
        inner = stopping.source.name if stopping.source is not None else "stopping"
        super().__init__(name=f"baseline({inner})")

    @property
    def series(self) -> CoefficientSeries:
        return series_of(self.stopping)

    def sample(self, coins: CoinSource, uniforms: UniformSource) -> FactoryOutcome:
        return sample_wastlund_baseline(self.stopping, coins, uniforms, max_inputs=self.max_inputs)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        f = eval_f(self.stopping, p, tol)
        terminal = self.stopping.terminal_index
        if terminal is None:
            # E[L] = sum k c_k, which need not converge
            return Reference(f=f)
        series = self.series
        mean_length = sum((k * Fraction(series.coefficient_at(k)) for k in range(1, terminal + 1)), Fraction(0))
        return Reference(f=f, expected_n=EvalResult(value=float(mean_length), error_bound=0.0, terms_used=terminal))
