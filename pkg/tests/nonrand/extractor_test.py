"""Test von Neumann extraction."""

from collections import Counter

import pytest

from coinfactory.factory.sources import ScriptedCoin
from coinfactory.factory.sources import SimulatedCoin
from coinfactory.harness.stats import geometric_fit
from coinfactory.harness.stats import proportion_z
from coinfactory.nonrand.extractor import von_neumann_bit


@pytest.mark.parametrize(
    "bits,expected",
    [
        ([0, 1], (0, 1)),
        ([1, 0], (1, 1)),
        ([0, 0, 1, 1, 1, 0], (1, 3)),
        ([1, 1, 0, 1], (0, 2)),
    ],
)
def test_scripted_pairs(bits, expected):
    """Test that equal pairs are discarded and the first bit of a differing pair is kept."""

    # ARRANGE
    coins = ScriptedCoin(bits)

    # ACT
    result = von_neumann_bit(coins)

    # ASSERT
    assert result == expected
    assert coins.consumed == 2 * expected[1]


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_extracted_bits_are_fair(seed, p):
    """Test that extracted bits are Bernoulli(1/2) whatever the bias."""

    # ARRANGE
    count = 20_000
    coins = SimulatedCoin(p, seed)

    # ACT
    draws = [von_neumann_bit(coins) for _ in range(count)]
    ones = sum(bit for bit, _ in draws)
    mean_pairs = sum(pairs for _, pairs in draws) / count

    # ASSERT
    rate = 2 * p * (1 - p)
    assert abs(proportion_z(ones, count, 0.5)) <= 4.0
    assert mean_pairs == pytest.approx(1 / rate, rel=0.05)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_pairs_are_geometric(seed, p):
    """Test the number of pairs read against Geometric(2p(1-p)) on ten cells."""

    # ARRANGE
    coins = SimulatedCoin(p, seed)
    histogram = Counter(von_neumann_bit(coins)[1] for _ in range(20_000))

    # ACT
    _, dof, p_value = geometric_fit(histogram, 2 * p * (1 - p))

    # ASSERT
    assert dof == 10
    assert p_value >= 1e-3
