"""Test the factory outcome model."""

import pytest
from pydantic import ValidationError

from coinfactory.factory.models.outcome import FactoryOutcome


def test_valid_factory_outcome():
    """Test valid factory outcomes."""

    outcome = FactoryOutcome(y=1, n=3, uniforms=2, trace=[(0, 0), (0, 0), (1, 1)])
    assert outcome.y == 1
    assert outcome.n == 3
    assert outcome.uniforms == 2

    outcome = FactoryOutcome(y=0, n=0)
    assert outcome.trace is None
    assert outcome.uniforms == 0


@pytest.mark.parametrize(
    "invalid_options",
    [
        {"y": 2, "n": 1},
        {"y": 1, "n": -1},
        {"y": 1, "n": 1, "uniforms": -1},
        {"y": 0, "n": 2, "trace": [(0, 1)]},
        {"y": 0, "n": 2, "trace": [(0, 0), (0, 0)]},
    ],
)
def test_invalid_factory_outcome(invalid_options):
    """Test invalid factory outcomes."""

    with pytest.raises(ValidationError):
        FactoryOutcome(**invalid_options)
