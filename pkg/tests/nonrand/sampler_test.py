"""Test the non-randomized factory."""

import math
from collections import Counter
from fractions import Fraction

import pytest

from coinfactory.factory.sources import ScriptedCoin
from coinfactory.factory.sources import SimulatedCoin
from coinfactory.harness.stats import log_tail_slope
from coinfactory.harness.stats import moments
from coinfactory.harness.stats import tail_curve
from coinfactory.nonrand.digits import digit_oracle_from
from coinfactory.nonrand.sampler import Algorithm2Factory
from coinfactory.nonrand.sampler import sample_algorithm2
from coinfactory.series.catalog import catalog
from coinfactory.series.stopping import stopping_from_coefficients


def test_scripted_stop_on_digit(sqrt_series):
    """Test X_1 = 0 followed by T = 1 and digit 1 of d_1 = 1/2."""

    # ARRANGE
    stopping = stopping_from_coefficients(sqrt_series)
    oracle = digit_oracle_from(stopping)

    # ACT
    outcome = sample_algorithm2(stopping, oracle, ScriptedCoin([0, 1, 0]))

    # ASSERT
    assert (outcome.y, outcome.n, outcome.n_outer) == (0, 3, 1)
    assert outcome.pair_counts == [1]
    assert outcome.uniforms == 0


def test_scripted_success_still_draws_digit_event(sqrt_series):
    """Test that V_1 is resolved even when X_1 = 1."""

    # ARRANGE
    stopping = stopping_from_coefficients(sqrt_series)
    oracle = digit_oracle_from(stopping)

    # ACT
    outcome = sample_algorithm2(stopping, oracle, ScriptedCoin([1, 0, 1, 1, 0]))

    # ASSERT
    assert (outcome.y, outcome.n, outcome.n_outer) == (1, 5, 1)
    assert outcome.pair_counts == [2]
    assert outcome.n_total == 5


def test_dyadic_shortcut_skips_constant_tail():
    """Test that d_1 = 1 needs no fair bit under the shortcut."""

    # ARRANGE
    factory = Algorithm2Factory(stopping_from_coefficients(catalog("finite", [1])), dyadic_shortcut=True)

    # ACT
    outcome = factory.sample(ScriptedCoin([0]))

    # ASSERT
    assert (outcome.y, outcome.n, outcome.n_outer) == (0, 1, 1)
    assert outcome.pair_counts == [0]


def test_oracle_must_match_sequence(sqrt_series, entropy_series):
    """Test that a digit oracle of another sequence is rejected."""

    # ARRANGE
    oracle = digit_oracle_from(stopping_from_coefficients(entropy_series))

    # ASSERT
    with pytest.raises(ValueError):
        sample_algorithm2(stopping_from_coefficients(sqrt_series), oracle, ScriptedCoin([0, 1]))


def test_nonrandomized_laws(sqrt_series, seed, within_sigmas):
    """Test Pr[Y = 1] = sqrt(p) and E[N] = 9 sqrt(2) at p = 0.5, with no uniforms."""

    # ARRANGE
    count = 10_000
    factory = Algorithm2Factory(stopping_from_coefficients(sqrt_series))
    coins = SimulatedCoin(0.5, seed)

    # ACT
    outcomes = [factory.sample(coins) for _ in range(count)]
    mean_y = sum(outcome.y for outcome in outcomes) / count
    mean_n, sd_n = moments(count, sum(outcome.n for outcome in outcomes), sum(outcome.n**2 for outcome in outcomes))
    mean_outer = sum(outcome.n_outer for outcome in outcomes) / count

    # ASSERT
    f = math.sqrt(0.5)
    assert within_sigmas(mean_y, f, math.sqrt(f * (1 - f) / count))
    assert within_sigmas(mean_n, 9 * math.sqrt(2), sd_n / math.sqrt(count))
    assert mean_outer == pytest.approx(f / 0.5, rel=0.05)
    assert all(outcome.uniforms == 0 for outcome in outcomes)
    assert coins.consumed == sum(outcome.n for outcome in outcomes)


def test_nonrandomized_reference(sqrt_series):
    """Test the exact law and its absence under the shortcut."""

    # ARRANGE
    plain = Algorithm2Factory(stopping_from_coefficients(sqrt_series))
    shortcut = Algorithm2Factory(stopping_from_coefficients(sqrt_series), dyadic_shortcut=True)

    # ACT
    reference = plain.reference(0.5)

    # ASSERT
    assert plain.name == "sqrt"
    assert reference.expected_n.value == pytest.approx(9 * math.sqrt(2), abs=1e-6)
    assert shortcut.reference(0.5).expected_n is None
    assert shortcut.reference(0.5).f.contains(math.sqrt(0.5))


def test_ones_convention_keeps_the_law(seed, within_sigmas):
    """Test that both expansions of a dyadic d_k give the same output law."""

    # ARRANGE
    count = 10_000
    series = catalog("finite", [Fraction(1, 2), Fraction(1, 2)])
    factory = Algorithm2Factory(stopping_from_coefficients(series), convention="ones")
    f = 1 - (0.5 * 0.5 + 0.5 * 0.25)

    # ACT
    coins = SimulatedCoin(0.5, seed)
    mean_y = sum(factory.sample(coins).y for _ in range(count)) / count

    # ASSERT
    assert within_sigmas(mean_y, f, math.sqrt(f * (1 - f) / count))


@pytest.mark.parametrize("p", [0.25, 0.5])
def test_total_inputs_have_geometric_tail(sqrt_series, seed, p):
    """Test that log Pr[N > n] decreases along the observed tail."""

    # ARRANGE
    count = 10_000
    factory = Algorithm2Factory(stopping_from_coefficients(sqrt_series))
    coins = SimulatedCoin(p, seed)

    # ACT
    histogram = Counter(factory.sample(coins).n_total for _ in range(count))
    slope = log_tail_slope(tail_curve(histogram, count), count)

    # ASSERT
    assert slope < 0
