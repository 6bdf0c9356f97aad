"""Test configuration file for fixtures."""

import math

import numpy as np
import pytest

from coinfactory.factory.sources import SimulatedCoin
from coinfactory.factory.sources import UniformSource
from coinfactory.series.catalog import catalog
from coinfactory.utils.config import DEFAULT_SEED
from coinfactory.utils.config import get_settings


SIGMAS = 4.0


@pytest.fixture()
def seed():
    """The fixed seed every statistical test starts from."""
    return DEFAULT_SEED


@pytest.fixture()
def clean_settings(monkeypatch):
    """Settings re-read from a controlled environment."""
    for variable in ("FACTORY_SEED", "FACTORY_LOG_LEVEL", "FACTORY_WORKERS", "FACTORY_CONFIDENCE", "FACTORY_CHUNK_SIZE"):
        monkeypatch.delenv(variable, raising=False)
    get_settings.cache_clear()
    yield monkeypatch
    get_settings.cache_clear()


@pytest.fixture()
def sqrt_series():
    return catalog("sqrt")


@pytest.fixture()
def entropy_series():
    return catalog("entropy")


@pytest.fixture()
def streams(seed):
    """Independent (coins, uniforms) sources for a coin probability and a stream key."""

    def make(p: float, key: int = 0):
        root = np.random.SeedSequence(entropy=seed, spawn_key=(99, key))
        coin_seed, uniform_seed = root.spawn(2)
        return SimulatedCoin(p, coin_seed), UniformSource(uniform_seed)

    return make


@pytest.fixture()
def sample_many(streams):
    """Draw `count` outcomes of a factory at p from fresh seeded streams."""

    def draw(factory, p: float, count: int, key: int = 0):
        coins, uniforms = streams(p, key)
        return [factory.sample(coins, uniforms) for _ in range(count)]

    return draw


def _within_sigmas(observed: float, expected: float, standard_error: float, sigmas: float = SIGMAS) -> bool:
    if standard_error == 0.0:
        return math.isclose(observed, expected, rel_tol=1e-12, abs_tol=1e-12)
    return abs(observed - expected) <= sigmas * standard_error


@pytest.fixture()
def within_sigmas():
    """Whether an estimate lies within 4 standard errors of its target."""
    return _within_sigmas
