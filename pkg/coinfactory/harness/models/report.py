"""Pydantic models for experiment reports and their CSV/JSON renderings."""

from pathlib import Path
from typing import Optional
from typing import Union

import pandas as pd
from pydantic import BaseModel
from pydantic import Field

from coinfactory.analysis.models.result import EvalResult
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

SCHEMA_VERSION = 1


class PointRecord(BaseModel):
    """Aggregated replications at one grid point.

    Args:
        p (float): Coin probability.
        completed (int): Replications that produced an output.
        truncations (int): Baseline replications aborted at the input cap;
            never folded into the means.
        mean_y (float): Empirical Pr[Y = 1], with its Wilson interval.
        mean_n (float): Empirical E[N], with its normal interval.
        tail (list[float], optional): Pr[N > n] for n = 0..max_n.
        n_histogram (dict[int, int]): Counts of N.
        joint_y0 (dict[int, int], optional): Counts of (N = n, Y = 0).
        outer_histogram (dict[int, int], optional): Counts of the outer
            iterations of the non-randomized sampler.
        reference_f, reference_n (EvalResult, optional): Exact Pr[Y = 1] and E[N].
        z_scores (dict[str, float]): Gate statistics, after allowing for the
            reference error bounds.
        checks (dict[str, bool]): Gate outcomes.
    """

    p: float
    completed: int = Field(ge=0)
    truncations: int = Field(default=0, ge=0)
    mean_y: float
    mean_y_ci: tuple[float, float]
    mean_n: float
    sd_n: float
    mean_n_ci: tuple[float, float]
    mean_uniforms: float = 0.0
    mean_n_outer: Optional[float] = None
    max_n: int = 0
    tail: Optional[list[float]] = None
    n_histogram: dict[int, int] = Field(default_factory=dict)
    joint_y0: Optional[dict[int, int]] = None
    outer_histogram: Optional[dict[int, int]] = None
    reference_f: Optional[EvalResult] = None
    reference_n: Optional[EvalResult] = None
    z_scores: dict[str, float] = Field(default_factory=dict)
    checks: dict[str, bool] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class CellResult(BaseModel):
    """One (N = n, Y = 0) cell of the joint law test."""

    n: int
    observed: int
    expected: float
    z: float
    passed: bool


class JointLawResult(BaseModel):
    """Per-cell z-tests and the aggregate chi-square of Pr[N = n, Y = 0] = c_n (1-p)^n."""

    p: float
    cells: list[CellResult]
    chi_square: float
    dof: int
    p_value: float
    passed: bool


class RunReport(BaseModel):
    """The outcome of one experiment: one record per grid point."""

    schema_version: int = SCHEMA_VERSION
    expression: str
    algorithm: Algorithm
    seed: int
    replications: int
    confidence: float
    gate_sigmas: float
    points: list[PointRecord]

    @property
    def passed(self) -> bool:
        return all(point.passed for point in self.points)

    def point(self, p: float) -> PointRecord:
        """The record of the grid point closest to p."""
        return min(self.points, key=lambda point: abs(point.p - p))

    def to_frame(self) -> pd.DataFrame:
        """One row per grid point with the scalar statistics."""
        rows = []
        for point in self.points:
            row = {
                "schema_version": self.schema_version,
                "expression": self.expression,
                "algorithm": self.algorithm.value,
                "p": point.p,
                "completed": point.completed,
                "truncations": point.truncations,
                "mean_y": point.mean_y,
                "mean_y_low": point.mean_y_ci[0],
                "mean_y_high": point.mean_y_ci[1],
                "mean_n": point.mean_n,
                "mean_n_low": point.mean_n_ci[0],
                "mean_n_high": point.mean_n_ci[1],
                "sd_n": point.sd_n,
                "max_n": point.max_n,
                "mean_uniforms": point.mean_uniforms,
                "mean_n_outer": point.mean_n_outer,
                "ref_f": point.reference_f.value if point.reference_f else None,
                "ref_f_error": point.reference_f.error_bound if point.reference_f else None,
                "ref_n": point.reference_n.value if point.reference_n else None,
                "ref_n_error": point.reference_n.error_bound if point.reference_n else None,
            }
            row.update({f"z_{name}": value for name, value in point.z_scores.items()})
            row.update({f"pass_{name}": value for name, value in point.checks.items()})
            row["passed"] = point.passed
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        """CSV text of `to_frame`, also written to `path` when given."""
        text = self.to_frame().to_csv(index=False, float_format="%.12g", lineterminator="\n")
        if path is not None:
            Path(path).write_text(text)
            logger.info(f"Wrote {len(self.points)} rows to {path}")
        return text

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        """Full JSON report including histograms, also written to `path` when given."""
        text = self.model_dump_json(indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
            logger.info(f"Wrote the report to {path}")
        return text


class SweepPoint(BaseModel):
    """Empirical cost against the optimal rate f(p)/p at one grid point."""

    p: float
    mean_n: float
    mean_n_ci: tuple[float, float]
    f: EvalResult
    ratio: float
    ratio_ci: tuple[float, float]
    z: float
    passed: bool


class SweepEntry(BaseModel):
    """One expression across the grid, with the fitted log-log slope of E[N] against p."""

    expression: str
    points: list[SweepPoint]
    slope: Optional[float] = None
    reference_slope: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(point.passed for point in self.points)


class SweepReport(BaseModel):
    """Outcome of the optimality sweep over several expressions."""

    schema_version: int = SCHEMA_VERSION
    seed: int
    replications: int
    confidence: float
    gate_sigmas: float
    entries: list[SweepEntry]

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def entry(self, expression: str) -> SweepEntry:
        for entry in self.entries:
            if entry.expression == expression:
                return entry
        raise KeyError(expression)

    def to_frame(self) -> pd.DataFrame:
        """One row per (expression, p)."""
        rows = []
        for entry in self.entries:
            for point in entry.points:
                rows.append(
                    {
                        "schema_version": self.schema_version,
                        "expression": entry.expression,
                        "p": point.p,
                        "mean_n": point.mean_n,
                        "mean_n_low": point.mean_n_ci[0],
                        "mean_n_high": point.mean_n_ci[1],
                        "f": point.f.value,
                        "f_error": point.f.error_bound,
                        "ratio": point.ratio,
                        "ratio_low": point.ratio_ci[0],
                        "ratio_high": point.ratio_ci[1],
                        "z": point.z,
                        "passed": point.passed,
                        "slope": entry.slope,
                        "reference_slope": entry.reference_slope,
                    },
                )
        return pd.DataFrame(rows)

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.to_frame().to_csv(index=False, float_format="%.12g", lineterminator="\n")
        if path is not None:
            Path(path).write_text(text)
            logger.info(f"Wrote the sweep table to {path}")
        return text

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.model_dump_json(indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
            logger.info(f"Wrote the sweep report to {path}")
        return text


class SelftestCase(BaseModel):
    """Outcome of one reduced-scale invariant check."""

    module: str
    name: str
    passed: bool
    detail: str = ""


class SelftestReport(BaseModel):
    """All self-test cases, in execution order."""

    schema_version: int = SCHEMA_VERSION
    seed: int
    replications: int
    cases: list[SelftestCase]

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([case.model_dump() for case in self.cases])


class VerifyReport(BaseModel):
    """A run together with the joint law test of each grid point."""

    report: RunReport
    joint_law: list[JointLawResult]

    @property
    def passed(self) -> bool:
        return self.report.passed and all(law.passed for law in self.joint_law)

    def to_frame(self) -> pd.DataFrame:
        """One row per tested cell."""
        rows = [
            {"expression": self.report.expression, "p": law.p, **cell.model_dump(), "chi_square_p_value": law.p_value}
            for law in self.joint_law
            for cell in law.cells
        ]
        return pd.DataFrame(rows)

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.to_frame().to_csv(index=False, float_format="%.12g", lineterminator="\n")
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.model_dump_json(indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text
