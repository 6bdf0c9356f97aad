"""Experiment specification model and its key-value file format."""

from enum import Enum
from pathlib import Path
from typing import Optional
from typing import Union

import dotenv
import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from coinfactory.utils.config import get_settings


class Algorithm(str, Enum):
    """Which sampler realises the catalog and combinator atoms of an expression."""

    RANDOMIZED = "rand"
    NONRANDOMIZED = "nonrand"
    BASELINE = "baseline"


_ALGORITHM_ALIASES = {
    "randomized": Algorithm.RANDOMIZED,
    "nonrandomized": Algorithm.NONRANDOMIZED,
    "non-randomized": Algorithm.NONRANDOMIZED,
    "wastlund": Algorithm.BASELINE,
}


class Statistic(str, Enum):
    """Statistics a run can be asked to report."""

    MEAN_Y = "mean_y"
    MEAN_N = "mean_n"
    TAIL = "tail"
    JOINT = "joint"
    REFERENCE = "reference"


def parse_p_grid(text: str) -> list[float]:
    """Parse "0.1,0.5,0.9" or "geom:start,stop,points" into a list of probabilities."""
    text = text.strip()
    if text.startswith("geom:"):
        parts = text[len("geom:"):].split(",")
        if len(parts) != 3:
            raise ValueError(f"Expected geom:start,stop,points, got {text!r}")
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
        if points < 1:
            raise ValueError("A geometric grid needs at least one point")
        return [float(value) for value in np.geomspace(start, stop, points)]
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as parse_exception:
        raise ValueError(f"Not a comma separated list of probabilities: {text!r}") from parse_exception


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"Not a boolean: {text!r}")


# key in the experiment file -> (field, parser)
_CONFIG_KEYS = {
    "EXPRESSION": ("expression", str),
    "P_GRID": ("p_grid", parse_p_grid),
    "REPLICATIONS": ("replications", int),
    "SEED": ("seed", int),
    "ALGORITHM": ("algorithm", str),
    "OUTPUTS": ("outputs", lambda text: [part.strip() for part in text.split(",") if part.strip()]),
    "CONFIDENCE": ("confidence", float),
    "DIGIT_CEILING": ("digit_ceiling", int),
    "DYADIC_SHORTCUT": ("dyadic_shortcut", _parse_bool),
    "MAX_INPUTS": ("max_inputs", int),
    "WORKERS": ("workers", int),
    "CHUNK_SIZE": ("chunk_size", int),
}


class ExperimentSpec(BaseModel):
    """A Monte Carlo experiment over a grid of coin probabilities.

    Args:
        expression (str): Factory expression (see docs/grammar.md).
        p_grid (list[float]): Coin probabilities, each in (0, 1).
        replications (int): Samples M per grid point.
        seed (int): Root seed; every (p, chunk) stream is derived from it.
        algorithm (Algorithm): Sampler for the expression's atoms.
        outputs (list[Statistic]): Statistics to report.
        confidence (float): Confidence level of the reported intervals.
        digit_ceiling (int, optional): Digit resolution limit of the non-randomized sampler.
        dyadic_shortcut (bool): Enable the non-randomized constant-tail shortcut.
        max_inputs (int, optional): Cap on L for the baseline.
        workers (int): Worker processes.
        chunk_size (int): Replications per work unit.
    """

    expression: str = Field(min_length=1)
    p_grid: list[float] = Field(min_length=1)
    replications: int = Field(ge=1)
    seed: int = Field(default_factory=lambda: get_settings().seed, ge=0, lt=2**64)
    algorithm: Algorithm = Algorithm.RANDOMIZED
    outputs: list[Statistic] = Field(default_factory=lambda: list(Statistic))
    confidence: float = Field(default_factory=lambda: get_settings().confidence, gt=0.0, lt=1.0)
    digit_ceiling: Optional[int] = Field(default=None, ge=64)
    dyadic_shortcut: bool = False
    max_inputs: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)
    chunk_size: int = Field(default_factory=lambda: get_settings().chunk_size, ge=1)

    @field_validator("p_grid")
    @classmethod
    def check_probabilities(cls, p_grid: list[float]) -> list[float]:
        """Every grid point lies strictly between 0 and 1."""
        for p in p_grid:
            if not 0.0 < p < 1.0:
                raise ValueError(f"Grid probabilities must lie in (0, 1), got {p}")
        return p_grid

    @field_validator("algorithm", mode="before")
    @classmethod
    def accept_aliases(cls, value):
        """Long names (randomized, nonrandomized) are accepted as well."""
        if isinstance(value, str):
            return _ALGORITHM_ALIASES.get(value.strip().lower(), value.strip().lower())
        return value

    @model_validator(mode="after")
    def check_shortcut(self):
        """The dyadic shortcut only exists for the non-randomized sampler."""
        if self.dyadic_shortcut and self.algorithm != Algorithm.NONRANDOMIZED:
            raise ValueError("dyadic_shortcut requires the nonrand algorithm")
        return self

    def wants(self, statistic: Statistic) -> bool:
        return statistic in self.outputs

    @classmethod
    def from_config(cls, path: Union[str, Path], **overrides) -> "ExperimentSpec":
        """Load a spec from a KEY=VALUE file, then apply non-None overrides.

        Args:
            path: File with the keys EXPRESSION, P_GRID, REPLICATIONS and
                optionally SEED, ALGORITHM, OUTPUTS, CONFIDENCE, DIGIT_CEILING,
                DYADIC_SHORTCUT, MAX_INPUTS, WORKERS, CHUNK_SIZE.
            overrides: Field values taking precedence over the file.

        Returns:
            ExperimentSpec: The validated spec.
        """
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Experiment file not found: {path}")
        values: dict = {}
        for key, text in dotenv.dotenv_values(path).items():
            if key not in _CONFIG_KEYS:
                raise ValueError(f"Unknown key {key!r} in {path}")
            if text is None:
                continue
            field, parser = _CONFIG_KEYS[key]
            values[field] = parser(text)
        values.update({field: value for field, value in overrides.items() if value is not None})
        return cls.model_validate(values)
