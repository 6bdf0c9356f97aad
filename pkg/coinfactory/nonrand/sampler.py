"""The non-randomized factory (Algorithm 2).

Step 3 of the randomized factory is replaced by coin-driven digit lookup:
starting at j = 1, fair bits T are extracted from pairs of inputs; T = 0
moves to the next digit and T = 1 sets V_i to digit j of d_i. V_i is then
Bernoulli(d_i) and independent of X_i, so the output law is unchanged and
no uniform variable is used.
"""

from typing import Optional

from coinfactory.analysis.evaluate import DEFAULT_TOLERANCE
from coinfactory.analysis.evaluate import alg2_cost_factor
from coinfactory.analysis.evaluate import eval_f
from coinfactory.analysis.models.result import Reference
from coinfactory.factory.sampler import Factory
from coinfactory.factory.sampler import series_of
from coinfactory.factory.sources import CoinSource
from coinfactory.factory.sources import UniformSource
from coinfactory.nonrand.digits import DigitOracle
from coinfactory.nonrand.digits import DyadicConvention
from coinfactory.nonrand.digits import digit_oracle_from
from coinfactory.nonrand.extractor import von_neumann_bit
from coinfactory.nonrand.models.outcome import NonRandOutcome
from coinfactory.series.coefficients import CoefficientSeries
from coinfactory.series.stopping import StoppingSequence


def _digit_event(oracle: DigitOracle, k: int, coins: CoinSource, dyadic_shortcut: bool) -> tuple[int, int]:
    tail = oracle.dyadic_tail_start(k) if dyadic_shortcut else None
    pairs = 0
    j = 1
    while True:
        if tail is not None and j >= tail[0]:
            return tail[1], pairs
        t, used = von_neumann_bit(coins)
        pairs += used
        if t == 1:
            return oracle.digit_at(k, j), pairs
        j += 1


def sample_algorithm2(
    d: StoppingSequence,
    oracle: DigitOracle,
    coins: CoinSource,
    dyadic_shortcut: bool = False,
) -> NonRandOutcome:
    """One run of the non-randomized factory.

    Args:
        d (StoppingSequence): Stopping probabilities; the oracle supplies their digits.
        oracle (DigitOracle): Digits of d_k.
        coins (CoinSource): The only source of randomness.
        dyadic_shortcut (bool): Stop drawing fair bits once j reaches the
            start of a constant digit tail of d_i.

    Returns:
        NonRandOutcome: Y, the total inputs, the outer iterations and the
            pairs drawn per iteration.
    """
    if oracle.stopping is not d:
        raise ValueError("The digit oracle was built for another stopping sequence")
    pair_counts: list[int] = []
    k = 0
    while True:
        k += 1
        x = coins.next_bit()
        v, pairs = _digit_event(oracle, k, coins, dyadic_shortcut)
        pair_counts.append(pairs)
        if x or v:
            return NonRandOutcome(
                y=x,
                n=k + 2 * sum(pair_counts),
                n_outer=k,
                pair_counts=pair_counts,
            )


class Algorithm2Factory(Factory):
    """The non-randomized factory for one stopping sequence.

    Args:
        stopping (StoppingSequence): d_k of the target function.
        dyadic_shortcut (bool): Enable the constant-tail shortcut.
        convention (DyadicConvention): Expansion of dyadic d_k.
        precision_ceiling (int, optional): Digit resolution limit for tracked series.
    """

    def __init__(
        self,
        stopping: StoppingSequence,
        dyadic_shortcut: bool = False,
        convention: DyadicConvention = DyadicConvention.ZEROS,
        precision_ceiling: Optional[int] = None,
    ):
        self.stopping = stopping
        self.dyadic_shortcut = dyadic_shortcut
        self.oracle = digit_oracle_from(stopping, convention=convention, precision_ceiling=precision_ceiling)
        super().__init__(name=stopping.source.name if stopping.source is not None else "stopping")

    @property
    def series(self) -> CoefficientSeries:
        return series_of(self.stopping)

    def sample(self, coins: CoinSource, uniforms: Optional[UniformSource] = None) -> NonRandOutcome:
        return sample_algorithm2(self.stopping, self.oracle, coins, dyadic_shortcut=self.dyadic_shortcut)

    def reference(self, p: float, tol: float = DEFAULT_TOLERANCE) -> Reference:
        f = eval_f(self.stopping, p, tol)
        if self.dyadic_shortcut:
            # the shortcut lowers E[N] by an amount that depends on the digits of every d_k
            return Reference(f=f)
        return Reference(f=f, expected_n=f.scaled(alg2_cost_factor(p) / p))
