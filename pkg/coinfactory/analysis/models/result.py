"""Pydantic models for error-bounded evaluations."""

from typing import Optional

from pydantic import BaseModel
from pydantic import Field


class EvalResult(BaseModel):
    """A value with a guaranteed bound |true - value| <= error_bound.

    Args:
        value (float): The computed value.
        error_bound (float): Guaranteed absolute error.
        terms_used (int): Series terms summed to obtain the value.
    """

    value: float
    error_bound: float = Field(ge=0.0)
    terms_used: int = Field(default=0, ge=0)

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @classmethod
    def from_bounds(cls, lower: float, upper: float, terms_used: int = 0) -> "EvalResult":
        return cls(value=(lower + upper) / 2, error_bound=(upper - lower) / 2, terms_used=terms_used)

    def scaled(self, factor: float) -> "EvalResult":
        return EvalResult(
            value=self.value * factor,
            error_bound=self.error_bound * abs(factor),
            terms_used=self.terms_used,
        )

    def complement(self) -> "EvalResult":
        return EvalResult(value=1.0 - self.value, error_bound=self.error_bound, terms_used=self.terms_used)

    def plus(self, other: "EvalResult") -> "EvalResult":
        return EvalResult(
            value=self.value + other.value,
            error_bound=self.error_bound + other.error_bound,
            terms_used=max(self.terms_used, other.terms_used),
        )

    def times(self, other: "EvalResult") -> "EvalResult":
        return EvalResult(
            value=self.value * other.value,
            error_bound=abs(self.value) * other.error_bound
            + abs(other.value) * self.error_bound
            + self.error_bound * other.error_bound,
            terms_used=max(self.terms_used, other.terms_used),
        )


class Reference(BaseModel):
    """Exact law of a factory at one p: Pr[Y=1] and E[N] when known."""

    f: EvalResult
    expected_n: Optional[EvalResult] = None
