"""Pydantic model for a sample of the non-randomized factory."""

from typing import Optional

from pydantic import Field
from pydantic import model_validator

from coinfactory.factory.models.outcome import FactoryOutcome


class NonRandOutcome(FactoryOutcome):
    """One output of the non-randomized factory.

    `n` is the total number of coin inputs; it splits into one input per outer
    iteration plus two per von Neumann pair.

    Args:
        n_outer (int): Outer iterations, distributed as the randomized factory's N.
        pair_counts (list[int], optional): Pairs drawn in each outer iteration.
    """

    n_outer: int = Field(ge=1)
    pair_counts: Optional[list[int]] = None

    @property
    def n_total(self) -> int:
        return self.n

    @model_validator(mode="after")
    def check_input_accounting(self):
        """n = n_outer + 2 * (pairs over all inner loops); no uniform is ever drawn."""
        if self.uniforms != 0:
            raise ValueError("The non-randomized factory draws no uniform variables")
        if self.pair_counts is not None:
            if len(self.pair_counts) != self.n_outer:
                raise ValueError(f"{len(self.pair_counts)} pair counts for {self.n_outer} outer iterations")
            if self.n != self.n_outer + 2 * sum(self.pair_counts):
                raise ValueError(
                    f"n = {self.n} differs from n_outer + 2 * pairs = {self.n_outer + 2 * sum(self.pair_counts)}",
                )
        return self
