"""Pydantic model for a single factory sample."""

from typing import Optional

from pydantic import BaseModel
from pydantic import Field
from pydantic import model_validator


class FactoryOutcome(BaseModel):
    """One output of a Bernoulli factory.

    Args:
        y (int): The output bit Y.
        n (int): Number of coin inputs consumed.
        uniforms (int): Number of uniform variables drawn.
        trace (list[tuple[int, int]], optional): The (X_i, V_i) pairs of each
            iteration, when requested from Algorithm 1.
    """

    y: int = Field(ge=0, le=1)
    n: int = Field(ge=0)
    uniforms: int = Field(default=0, ge=0)
    trace: Optional[list[tuple[int, int]]] = None

    @model_validator(mode="after")
    def check_trace(self):
        """A trace has one entry per input and ends on a stopping event."""
        if self.trace is not None:
            if len(self.trace) != self.n:
                raise ValueError(f"Trace length {len(self.trace)} differs from n = {self.n}")
            if self.trace:
                x_last, v_last = self.trace[-1]
                if not (x_last or v_last):
                    raise ValueError("The last trace entry must have X_n = 1 or V_n = 1")
        return self
