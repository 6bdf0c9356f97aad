"""Exceptions raised across the coinfactory package."""

from typing import Optional


class FactoryError(Exception):
    """Base class for every coinfactory error."""


class InconsistentSeriesError(FactoryError, ValueError):
    """A coefficient series violates c_k >= 0 or sum(c_k) <= 1."""


class InsufficientPrecisionError(FactoryError, ArithmeticError):
    """An interval-valued quantity could not be resolved below the precision ceiling."""


class TruncationError(FactoryError, RuntimeError):
    """A sampler hit its configured cap on consumed inputs."""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class ToleranceError(FactoryError, ArithmeticError):
    """A truncated evaluation could not reach the requested tolerance."""


class InsufficientReplicationsError(FactoryError, ValueError):
    """A statistical test has no cell with enough expected observations."""


class ExpressionSyntaxError(FactoryError, ValueError):
    """A factory or series expression failed to parse.

    Args:
        message (str): What went wrong.
        position (int, optional): Character offset in the expression text.
    """

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
