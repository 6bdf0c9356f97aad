"""Environment driven settings shared by the library and the CLI."""

import os
from functools import lru_cache

import dotenv
from pydantic import BaseModel
from pydantic import Field


dotenv.load_dotenv(".env")

DEFAULT_SEED = 20240229


class Settings(BaseModel):
    """Process-wide defaults.

    Every field can be overridden with a FACTORY_* environment variable
    (or a line in a local .env file).
    """

    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    log_level: str = "INFO"
    precision_bits: int = Field(default=256, ge=32)
    digit_ceiling: int = Field(default=4096, ge=64)
    baseline_cap: int = Field(default=1_000_000, ge=1)
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=10_000, ge=1)
    confidence: float = Field(default=0.9999, gt=0.0, lt=1.0)
    gate_sigmas: float = Field(default=4.0, gt=0.0)


_ENVIRONMENT_KEYS = {
    "seed": "FACTORY_SEED",
    "log_level": "FACTORY_LOG_LEVEL",
    "precision_bits": "FACTORY_PRECISION_BITS",
    "digit_ceiling": "FACTORY_DIGIT_CEILING",
    "baseline_cap": "FACTORY_BASELINE_CAP",
    "workers": "FACTORY_WORKERS",
    "chunk_size": "FACTORY_CHUNK_SIZE",
    "confidence": "FACTORY_CONFIDENCE",
    "gate_sigmas": "FACTORY_GATE_SIGMAS",
}


def load_settings() -> Settings:
    """Read the settings from the environment, ignoring unset variables."""
    values = {
        field: os.getenv(variable)
        for field, variable in _ENVIRONMENT_KEYS.items()
        if os.getenv(variable) not in (None, "")
    }
    return Settings.model_validate(values)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings for the current process."""
    return load_settings()
