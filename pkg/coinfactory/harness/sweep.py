"""Optimality sweep: the randomized sampler's E[N] against f(p)/p across a geometric grid."""

import math
from typing import Optional
from typing import Sequence

from coinfactory.harness import stats
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.harness.models.experiment import ExperimentSpec
from coinfactory.harness.models.experiment import Statistic
from coinfactory.harness.models.report import SweepEntry
from coinfactory.harness.models.report import SweepPoint
from coinfactory.harness.models.report import SweepReport
from coinfactory.harness.runner import run
from coinfactory.utils.config import get_settings
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)

DEFAULT_ENTRIES = ("sqrt", "entropy", "mobius_sqrt", "log2_sqrt", "exp_sqrt")


def sweep_optimality(
    entries: Sequence[str],
    p_grid: Sequence[float],
    replications: int,
    seed: Optional[int] = None,
    confidence: Optional[float] = None,
    workers: Optional[int] = None,
    gate_sigmas: Optional[float] = None,
) -> SweepReport:
    """Run the randomized sampler of every entry over the grid and compare E[N] p / f(p) with 1.

    Args:
        entries (Sequence[str]): Series expressions, e.g. catalog names.
        p_grid (Sequence[float]): Coin probabilities, typically geometric.
        replications (int): Samples per grid point.
        seed (int, optional): Root seed, shared by all entries.
        confidence (float, optional): Level of the reported intervals.
        workers (int, optional): Worker processes per run.
        gate_sigmas (float, optional): Width of the per-point gate.

    Returns:
        SweepReport: Ratios with intervals per point, plus the empirical and
            exact log-log slopes of E[N] against p per entry.
    """
    if not entries:
        raise ValueError("The sweep needs at least one expression")
    gate_sigmas = gate_sigmas or get_settings().gate_sigmas
    options = {"seed": seed, "confidence": confidence, "workers": workers}
    options = {name: value for name, value in options.items() if value is not None}

    results = []
    for expression in entries:
        spec = ExperimentSpec(
            expression=expression,
            p_grid=list(p_grid),
            replications=replications,
            algorithm=Algorithm.RANDOMIZED,
            outputs=[Statistic.MEAN_Y, Statistic.MEAN_N, Statistic.REFERENCE],
            **options,
        )
        report = run(spec, gate_sigmas=gate_sigmas)
        points = []
        for record in report.points:
            if record.reference_f is None or record.reference_n is None:
                raise ValueError(f"{expression} has no exact reference at p={record.p}")
            f = record.reference_f
            scale = record.p / f.value
            standard_error = record.sd_n / math.sqrt(record.completed) if record.completed > 1 else 0.0
            z = stats.z_score(record.mean_n, record.reference_n.value, standard_error, record.reference_n.error_bound)
            points.append(
                SweepPoint(
                    p=record.p,
                    mean_n=record.mean_n,
                    mean_n_ci=record.mean_n_ci,
                    f=f,
                    ratio=record.mean_n * scale,
                    ratio_ci=(record.mean_n_ci[0] * scale, record.mean_n_ci[1] * scale),
                    z=z,
                    passed=abs(z) <= gate_sigmas,
                ),
            )

        slope = reference_slope = None
        if len(set(p_grid)) > 1:
            slope = stats.log_log_slope([point.p for point in points], [point.mean_n for point in points])
            reference_slope = stats.log_log_slope(
                [record.p for record in report.points],
                [record.reference_n.value for record in report.points],
            )
            logger.info(f"{report.expression}: log-log slope {slope:.4f} (exact {reference_slope:.4f})")
        results.append(SweepEntry(expression=report.expression, points=points, slope=slope, reference_slope=reference_slope))

    return SweepReport(
        seed=report.seed,
        replications=replications,
        confidence=report.confidence,
        gate_sigmas=gate_sigmas,
        entries=results,
    )
