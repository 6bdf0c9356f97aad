"""Test the factory transforms."""

import math
from fractions import Fraction

import pytest

from coinfactory.factory.sampler import Algorithm1Factory
from coinfactory.factory.sources import ScriptedCoin
from coinfactory.factory.sources import UniformSource
from coinfactory.factory.transforms import Chain
from coinfactory.factory.transforms import InputComplement
from coinfactory.factory.transforms import OutputComplement
from coinfactory.factory.transforms import Product
from coinfactory.factory.transforms import Scale
from coinfactory.factory.transforms import transform_chain
from coinfactory.factory.transforms import transform_input_complement
from coinfactory.factory.transforms import transform_output_complement
from coinfactory.factory.transforms import transform_product
from coinfactory.factory.transforms import transform_scale
from coinfactory.series.catalog import catalog
from coinfactory.series.stopping import stopping_from_coefficients


@pytest.fixture()
def identity():
    """The factory of f(p) = p, which reads one input and outputs it."""
    return Algorithm1Factory(stopping_from_coefficients(catalog("finite", [1])))


@pytest.fixture()
def sqrt_factory(sqrt_series):
    return Algorithm1Factory(stopping_from_coefficients(sqrt_series))


def test_output_complement(identity, seed):
    """Test that the output is negated and the cost unchanged."""

    # ARRANGE
    factory = transform_output_complement(identity)

    # ACT
    outcome = factory.sample(ScriptedCoin([1]), UniformSource(seed))
    reference = factory.reference(0.3)

    # ASSERT
    assert isinstance(factory, OutputComplement)
    assert factory.name == "complement(finite:[1])"
    assert (outcome.y, outcome.n) == (0, 1)
    assert reference.f.value == pytest.approx(0.7)
    assert reference.expected_n.value == pytest.approx(1.0)
    assert factory.tail_bound(0.3, 2) == pytest.approx(0.49)


def test_input_complement(identity, sqrt_factory, seed):
    """Test that every input is flipped before the inner factory sees it."""

    # ARRANGE
    factory = transform_input_complement(identity)

    # ACT
    outcome = factory.sample(ScriptedCoin([1]), UniformSource(seed))
    reference = transform_input_complement(sqrt_factory).reference(0.75)

    # ASSERT
    assert isinstance(factory, InputComplement)
    assert factory.name == "flip_input(finite:[1])"
    assert (outcome.y, outcome.n) == (0, 1)
    assert reference.f.contains(0.5)
    assert reference.expected_n.contains(2.0)
    assert factory.tail_bound(0.3, 2) == pytest.approx(0.09)


def test_scale_by_one_is_transparent(identity, seed):
    """Test that alpha = 1 runs the inner factory without drawing a uniform."""

    # ARRANGE
    factory = transform_scale(identity, Fraction(1))

    # ACT
    outcome = factory.sample(ScriptedCoin([1]), UniformSource(seed))

    # ASSERT
    assert isinstance(factory, Scale)
    assert factory.name == "scale(finite:[1],alpha=1)"
    assert (outcome.y, outcome.n, outcome.uniforms) == (1, 1, 0)


@pytest.mark.parametrize("alpha", [Fraction(0), Fraction(3, 2), Fraction(-1, 4)])
def test_scale_alpha_range(identity, alpha):
    """Test that alpha must lie in (0, 1]."""

    with pytest.raises(ValueError):
        Scale(identity, alpha)


def test_scale_laws(identity, sample_many, within_sigmas):
    """Test Pr[Y = 1] = alpha p and E[N] = alpha at p = 0.5, alpha = 1/2."""

    # ARRANGE
    count = 20_000
    factory = Scale(identity, Fraction(1, 2))

    # ACT
    outcomes = sample_many(factory, 0.5, count)
    mean_y = sum(outcome.y for outcome in outcomes) / count
    mean_n = sum(outcome.n for outcome in outcomes) / count
    reference = factory.reference(0.5)

    # ASSERT
    assert factory.name == "scale(finite:[1],alpha=1/2)"
    assert all(outcome.n in (0, 1) and outcome.uniforms == 1 for outcome in outcomes)
    assert within_sigmas(mean_y, 0.25, math.sqrt(0.1875 / count))
    assert within_sigmas(mean_n, 0.5, math.sqrt(0.25 / count))
    assert reference.f.value == pytest.approx(0.25)
    assert reference.expected_n.value == pytest.approx(0.5)


def test_product_short_circuits(identity, seed):
    """Test that the second factory only runs when the first outputs 1."""

    # ARRANGE
    factory = transform_product(identity, identity)

    # ACT
    first_zero = factory.sample(ScriptedCoin([0]), UniformSource(seed))
    both_one = factory.sample(ScriptedCoin([1, 1]), UniformSource(seed))
    second_zero = factory.sample(ScriptedCoin([1, 0]), UniformSource(seed))
    reference = factory.reference(0.5)

    # ASSERT
    assert isinstance(factory, Product)
    assert factory.name == "prod(finite:[1],finite:[1])"
    assert (first_zero.y, first_zero.n) == (0, 1)
    assert (both_one.y, both_one.n) == (1, 2)
    assert (second_zero.y, second_zero.n) == (0, 2)
    assert reference.f.value == pytest.approx(0.25)
    assert reference.expected_n.value == pytest.approx(1.5)


def test_chain_feeds_outputs_as_coins(identity, sqrt_factory, seed):
    """Test that the outer factory reads outputs of the inner one."""

    # ARRANGE
    factory = transform_chain(identity, identity)
    nested = transform_chain(identity, sqrt_factory)

    # ACT
    outcome = factory.sample(ScriptedCoin([1]), UniformSource(seed))
    reference = nested.reference(0.25)

    # ASSERT
    assert isinstance(factory, Chain)
    assert nested.name == "chain(finite:[1],sqrt)"
    assert (outcome.y, outcome.n) == (1, 1)
    assert reference.f.contains(0.5)
    assert reference.expected_n.value == pytest.approx(2.0, abs=1e-6)


def test_chain_laws(sqrt_factory, sample_many, within_sigmas):
    """Test Pr[Y = 1] = sqrt(sqrt(p)) for a chain of two sqrt factories."""

    # ARRANGE
    count = 10_000
    factory = Chain(sqrt_factory, sqrt_factory)
    f = 0.0625**0.25

    # ACT
    outcomes = sample_many(factory, 0.0625, count)
    mean_y = sum(outcome.y for outcome in outcomes) / count

    # ASSERT
    assert within_sigmas(mean_y, f, math.sqrt(f * (1 - f) / count))
    assert factory.reference(0.0625).f.value == pytest.approx(f, abs=1e-6)
