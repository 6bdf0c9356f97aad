"""Test the report models."""

import pytest
from pydantic import ValidationError

from coinfactory.analysis.models.result import EvalResult
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.harness.models.report import PointRecord
from coinfactory.harness.models.report import RunReport
from coinfactory.harness.models.report import SelftestCase
from coinfactory.harness.models.report import SelftestReport


def _point(p: float, checks: dict[str, bool]) -> PointRecord:
    return PointRecord(
        p=p,
        completed=10,
        mean_y=0.5,
        mean_y_ci=(0.2, 0.8),
        mean_n=2.0,
        sd_n=1.0,
        mean_n_ci=(1.0, 3.0),
        reference_f=EvalResult(value=0.5, error_bound=1e-12),
        checks=checks,
        z_scores={name: 0.0 for name in checks},
    )


def test_run_report():
    """Test verdicts, point lookup and the flat table."""

    # ARRANGE
    report = RunReport(
        expression="sqrt",
        algorithm=Algorithm.RANDOMIZED,
        seed=1,
        replications=10,
        confidence=0.95,
        gate_sigmas=4.0,
        points=[_point(0.25, {"mean_y": True}), _point(0.5, {"mean_y": False})],
    )

    # ACT
    frame = report.to_frame()

    # ASSERT
    assert not report.passed
    assert report.point(0.26).p == 0.25
    assert list(frame["passed"]) == [True, False]
    assert list(frame["ref_f"]) == [0.5, 0.5]
    assert frame["ref_n"].isna().all()
    assert list(frame["algorithm"]) == ["rand", "rand"]


def test_point_without_checks_passes():
    """Test that a point with no gates is not a failure."""

    assert _point(0.5, {}).passed


def test_invalid_point_record():
    """Test that negative counts are rejected."""

    with pytest.raises(ValidationError):
        PointRecord(p=0.5, completed=-1, mean_y=0.0, mean_y_ci=(0.0, 0.0), mean_n=0.0, sd_n=0.0, mean_n_ci=(0.0, 0.0))


def test_selftest_report():
    """Test the self-test verdict and table."""

    # ARRANGE
    report = SelftestReport(
        seed=1,
        replications=10,
        cases=[SelftestCase(module="series", name="a", passed=True), SelftestCase(module="cli", name="b", passed=False, detail="x")],
    )

    # ASSERT
    assert not report.passed
    assert list(report.to_frame()["name"]) == ["a", "b"]
