"""Test the environment driven settings."""

import pytest
from pydantic import ValidationError

from coinfactory.utils.config import DEFAULT_SEED
from coinfactory.utils.config import Settings
from coinfactory.utils.config import get_settings
from coinfactory.utils.config import load_settings


def test_default_settings(clean_settings):
    """Test the built-in defaults."""

    # ACT
    settings = load_settings()

    # ASSERT
    assert settings.seed == DEFAULT_SEED
    assert settings.confidence == 0.9999
    assert settings.gate_sigmas == 4.0
    assert settings.workers == 1


def test_environment_overrides(clean_settings):
    """Test FACTORY_* variables, with empty values ignored."""

    # ARRANGE
    clean_settings.setenv("FACTORY_SEED", "42")
    clean_settings.setenv("FACTORY_CHUNK_SIZE", "500")
    clean_settings.setenv("FACTORY_WORKERS", "")

    # ACT
    settings = get_settings()

    # ASSERT
    assert (settings.seed, settings.chunk_size, settings.workers) == (42, 500, 1)
    assert get_settings() is settings


@pytest.mark.parametrize(
    "variable,value",
    [
        ("FACTORY_SEED", "-1"),
        ("FACTORY_WORKERS", "0"),
        ("FACTORY_CONFIDENCE", "1.5"),
        ("FACTORY_CHUNK_SIZE", "many"),
    ],
)
def test_invalid_environment(clean_settings, variable, value):
    """Test that invalid variables are rejected."""

    # ARRANGE
    clean_settings.setenv(variable, value)

    # ASSERT
    with pytest.raises(ValidationError):
        load_settings()


def test_invalid_settings():
    """Test field constraints."""

    with pytest.raises(ValidationError):
        Settings(digit_ceiling=8)
