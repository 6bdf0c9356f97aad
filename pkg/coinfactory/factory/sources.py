"""Coin and uniform sources consumed by the factories.

Simulated sources draw from numpy's counter-based Philox generator, seeded
through a `numpy.random.SeedSequence`, so that independent streams can be
spawned per replication chunk and per role (coins, uniforms).
"""

from abc import ABC
from abc import abstractmethod
from fractions import Fraction
from typing import Callable
from typing import Iterable
from typing import Optional
from typing import Union

import numpy as np


BLOCK_SIZE = 4096
WORD_BITS = 64

SeedLike = Union[int, np.random.SeedSequence]


def philox_generator(seed: SeedLike) -> np.random.Generator:
    """A Philox-backed generator from an integer seed or a seed sequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


class CoinSource(ABC):
    """A stream of i.i.d. Bernoulli(p) bits with p unknown to the consumer."""

    consumed: int = 0

    @abstractmethod
    def next_bit(self) -> int:
        """The next input X_i."""

    def take(self, count: int) -> list[int]:
        """The next `count` inputs."""
        return [self.next_bit() for _ in range(count)]


class SimulatedCoin(CoinSource):
    """Bernoulli(p) bits drawn in blocks from a Philox generator.

    Args:
        p (float): Success probability, hidden from the factories.
        seed: Integer seed or `numpy.random.SeedSequence`.
    """

    def __init__(self, p: float, seed: SeedLike):
        if not 0 < p < 1:
            raise ValueError(f"Coin probability must lie in (0, 1), got {p}")
        self._p = p
        self._generator = philox_generator(seed)
        self._buffer: list[int] = []
        self._cursor = 0
        self.consumed = 0

    def _refill(self):
        self._buffer = (self._generator.random(BLOCK_SIZE) < self._p).astype(np.uint8).tolist()
        self._cursor = 0

    def next_bit(self) -> int:
        if self._cursor == len(self._buffer):
            self._refill()
        bit = self._buffer[self._cursor]
        self._cursor += 1
        self.consumed += 1
        return bit

    def take(self, count: int) -> list[int]:
        bits: list[int] = []
        while len(bits) < count:
            if self._cursor == len(self._buffer):
                self._refill()
            stop = min(len(self._buffer), self._cursor + count - len(bits))
            bits.extend(self._buffer[self._cursor:stop])
            self._cursor = stop
        self.consumed += count
        return bits


class ScriptedCoin(CoinSource):
    """A fixed bit sequence, for deterministic traces."""

    def __init__(self, bits: Iterable[int]):
        self._bits = iter(bits)
        self.consumed = 0

    def next_bit(self) -> int:
        try:
            bit = next(self._bits)
        except StopIteration:
            raise RuntimeError(f"Scripted coin exhausted after {self.consumed} bits") from None
        self.consumed += 1
        return int(bit)


class FlippedCoin(CoinSource):
    """Presents 1 - X_i for every input of the wrapped source."""

    def __init__(self, inner: CoinSource):
        self.inner = inner

    @property
    def consumed(self) -> int:
        return self.inner.consumed

    def next_bit(self) -> int:
        return 1 - self.inner.next_bit()


class OutcomeCoin(CoinSource):
    """Uses successive outputs of a sampling callable as coin flips."""

    def __init__(self, draw: Callable[[], int]):
        self._draw = draw
        self.consumed = 0

    def next_bit(self) -> int:
        self.consumed += 1
        return self._draw()


Bracket = Callable[[int], tuple[int, int]]


class LazyUniform:
    """A uniform U on (0, 1) revealed 64 binary digits at a time.

    After m digits U lies in [w / 2^m, (w + 1) / 2^m) where w is the integer
    formed by the digits; comparisons against a target only reveal as many
    digits as needed to decide.
    """

    def __init__(self, source: "UniformSource"):
        self._source = source
        self.prefix = source.next_word()
        self.bits = WORD_BITS

    def refine(self):
        self.prefix = (self.prefix << WORD_BITS) | self._source.next_word()
        self.bits += WORD_BITS

    def below(self, bracket: Bracket) -> bool:
        """Whether U is below a target given by its bracket function.

        `bracket(bits)` returns (floor(lo * 2^bits), ceil(hi * 2^bits)) for an
        enclosure [lo, hi] of the target; terminates with probability 1.
        """
        while True:
            floor_lo, ceil_hi = bracket(self.bits)
            if self.prefix < floor_lo:
                return True
            if self.prefix >= ceil_hi:
                return False
            self.refine()

    def __float__(self) -> float:
        return (self.prefix + 0.5) / 2.0**self.bits


def rational_bracket(value: Fraction) -> Bracket:
    """Bracket function of an exact rational target."""

    def bracket(bits: int) -> tuple[int, int]:
        scaled = value.numerator << bits
        return scaled // value.denominator, -(-scaled // value.denominator)

    return bracket


class UniformSource:
    """The randomising sequence U, independent of every coin source.

    Args:
        seed: Integer seed or `numpy.random.SeedSequence`.
    """

    def __init__(self, seed: SeedLike):
        self._bit_generator = np.random.Philox(
            seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed),
        )
        self._buffer: list[int] = []
        self._cursor = 0
        self.draws = 0
        self.words = 0

    def next_word(self) -> int:
        """The next 64 uniformly random bits as an integer."""
        if self._cursor == len(self._buffer):
            self._buffer = self._bit_generator.random_raw(BLOCK_SIZE).tolist()
            self._cursor = 0
        word = self._buffer[self._cursor]
        self._cursor += 1
        self.words += 1
        return word

    def draw(self) -> LazyUniform:
        """A fresh uniform variable, revealed lazily."""
        self.draws += 1
        return LazyUniform(self)

    def next_uniform(self) -> float:
        """A uniform variable rounded to double precision, in (0, 1)."""
        return float(self.draw())

    def bernoulli(self, probability: Fraction, bracket: Optional[Bracket] = None) -> int:
        """One Bernoulli(probability) variable: 1 when U < probability."""
        if probability >= 1:
            return 1
        if probability <= 0:
            return 0
        return int(self.draw().below(bracket or rational_bracket(probability)))
