"""Test the reduced-scale invariant suite."""

import pytest

from coinfactory.harness import selftest
from coinfactory.harness.selftest import run_selftest
from coinfactory.utils.errors import InconsistentSeriesError


def test_registered_modules():
    """Test that every module contributes checks."""

    modules = {module for module, _, _ in selftest._CHECKS}
    assert modules == {"series", "analysis", "factory", "nonrand", "harness", "cli"}


def test_deterministic_modules_pass(seed):
    """Test the checks that do not sample."""

    # ACT
    report = run_selftest(seed=seed, modules=["series", "analysis", "cli"])

    # ASSERT
    assert report.passed
    assert {case.module for case in report.cases} == {"series", "analysis", "cli"}
    assert list(report.to_frame().columns) == ["module", "name", "passed", "detail"]


def test_nonrand_checks(seed):
    """Test the extraction and non-randomized sampler checks, including the pair-count law and tail decay."""

    # ACT
    report = run_selftest(replications=5_000, seed=seed, modules=["nonrand"])

    # ASSERT
    assert [case.name for case in report.cases] == ["fair_bits", "pair_counts_geometric", "nonrandomized_sampler"]
    assert report.passed
    assert "log-tail slope -" in report.cases[2].detail


def test_raising_check_fails(seed, monkeypatch):
    """Test that a check raising a library error becomes a failed case."""

    # ARRANGE
    def broken(replications, seed):
        raise InconsistentSeriesError("negative coefficient")

    monkeypatch.setattr(selftest, "_CHECKS", [("series", "broken", broken)])

    # ACT
    report = run_selftest(replications=10, seed=seed)

    # ASSERT
    assert not report.passed
    assert report.cases[0].detail == "InconsistentSeriesError: negative coefficient"


@pytest.mark.slow
def test_full_selftest(seed):
    """Test every registered check at the default scale."""

    assert run_selftest(seed=seed).passed
