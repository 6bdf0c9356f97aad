"""Von Neumann extraction of fair bits from a biased coin."""

from coinfactory.factory.sources import CoinSource


def von_neumann_bit(coins: CoinSource) -> tuple[int, int]:
    """Take pairs of inputs until the two values differ; return the first one.

    Args:
        coins (CoinSource): Any i.i.d. source with p in (0, 1).

    Returns:
        tuple[int, int]: A Bernoulli(1/2) bit, independent of p, and the number
            of pairs read (geometric with parameter 2 p (1-p)).
    """
    pairs = 0
    while True:
        first = coins.next_bit()
        second = coins.next_bit()
        pairs += 1
        if first != second:
            return first, pairs
