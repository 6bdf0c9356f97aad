"""Test the non-randomized outcome model."""

import pytest
from pydantic import ValidationError

from coinfactory.nonrand.models.outcome import NonRandOutcome


def test_valid_nonrand_outcome():
    """Test valid non-randomized outcomes."""

    outcome = NonRandOutcome(y=1, n=8, n_outer=2, pair_counts=[1, 2])
    assert outcome.n_total == 8
    assert outcome.uniforms == 0

    outcome = NonRandOutcome(y=0, n=11, n_outer=3)
    assert outcome.pair_counts is None


@pytest.mark.parametrize(
    "invalid_options",
    [
        {"y": 1, "n": 3, "n_outer": 1, "pair_counts": [1], "uniforms": 1},
        {"y": 1, "n": 4, "n_outer": 1, "pair_counts": [1]},
        {"y": 1, "n": 3, "n_outer": 2, "pair_counts": [1]},
        {"y": 1, "n": 3, "n_outer": 0},
    ],
)
def test_invalid_nonrand_outcome(invalid_options):
    """Test invalid non-randomized outcomes."""

    with pytest.raises(ValidationError):
        NonRandOutcome(**invalid_options)
