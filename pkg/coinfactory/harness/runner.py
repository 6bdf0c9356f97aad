"""Replication runner: seeded chunks, optional worker processes, aggregation and gates.

Every grid point is split into chunks of `chunk_size` replications. Chunk
(i, j) of grid point i draws its coins and uniforms from two streams spawned
from `SeedSequence(entropy=seed, spawn_key=(i, j))`, so a chunk's tallies do
not depend on where or when it runs. Tallies are integer counts merged in
chunk order, which makes the report identical for any number of workers.
"""

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from functools import lru_cache
from typing import Optional

import numpy as np

from coinfactory.analysis.models.result import Reference
from coinfactory.cli.expression import build_factory
from coinfactory.cli.expression import parse_expression
from coinfactory.factory.sampler import Factory
from coinfactory.factory.sources import SimulatedCoin
from coinfactory.factory.sources import UniformSource
from coinfactory.harness import stats
from coinfactory.harness.models.experiment import Algorithm
from coinfactory.harness.models.experiment import ExperimentSpec
from coinfactory.harness.models.experiment import Statistic
from coinfactory.harness.models.report import PointRecord
from coinfactory.harness.models.report import RunReport
from coinfactory.harness.verify import tail_gate
from coinfactory.utils.config import get_settings
from coinfactory.utils.errors import FactoryError
from coinfactory.utils.errors import TruncationError
from coinfactory.utils.logger import generate_logger


logger = generate_logger(name=__name__)


@dataclass(frozen=True)
class ChunkJob:
    """One unit of work: `size` replications at grid point `p_index`."""

    expression: str
    algorithm: Algorithm
    dyadic_shortcut: bool
    digit_ceiling: Optional[int]
    max_inputs: Optional[int]
    seed: int
    p: float
    p_index: int
    chunk_index: int
    size: int


@dataclass
class Tally:
    """Integer sufficient statistics of a batch of outcomes."""

    count: int = 0
    sum_y: int = 0
    sum_n: int = 0
    sum_n_squared: int = 0
    sum_uniforms: int = 0
    sum_n_outer: int = 0
    truncations: int = 0
    n_histogram: Counter = field(default_factory=Counter)
    joint_y0: Counter = field(default_factory=Counter)
    outer_histogram: Counter = field(default_factory=Counter)

    def merge(self, other: "Tally") -> "Tally":
        self.count += other.count
        self.sum_y += other.sum_y
        self.sum_n += other.sum_n
        self.sum_n_squared += other.sum_n_squared
        self.sum_uniforms += other.sum_uniforms
        self.sum_n_outer += other.sum_n_outer
        self.truncations += other.truncations
        self.n_histogram.update(other.n_histogram)
        self.joint_y0.update(other.joint_y0)
        self.outer_histogram.update(other.outer_histogram)
        return self


def chunk_streams(seed: int, p_index: int, chunk_index: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """The (coins, uniforms) seed sequences of one chunk."""
    root = np.random.SeedSequence(entropy=seed, spawn_key=(p_index, chunk_index))
    coins, uniforms = root.spawn(2)
    return coins, uniforms


@lru_cache(maxsize=16)
def _factory_for(
    expression: str,
    algorithm: Algorithm,
    dyadic_shortcut: bool,
    digit_ceiling: Optional[int],
    max_inputs: Optional[int],
) -> Factory:
    # one factory per process, so the memoised series are shared by its chunks
    return build_factory(
        expression,
        algorithm=algorithm,
        dyadic_shortcut=dyadic_shortcut,
        digit_ceiling=digit_ceiling,
        max_inputs=max_inputs,
    )


def run_chunk(job: ChunkJob) -> Tally:
    """Run the replications of one chunk and tally them."""
    factory = _factory_for(job.expression, job.algorithm, job.dyadic_shortcut, job.digit_ceiling, job.max_inputs)
    coin_seed, uniform_seed = chunk_streams(job.seed, job.p_index, job.chunk_index)
    coins = SimulatedCoin(job.p, coin_seed)
    uniforms = UniformSource(uniform_seed)
    tally = Tally()
    for _ in range(job.size):
        try:
            outcome = factory.sample(coins, uniforms)
        except TruncationError:
            tally.truncations += 1
            continue
        tally.count += 1
        tally.sum_y += outcome.y
        tally.sum_n += outcome.n
        tally.sum_n_squared += outcome.n * outcome.n
        tally.sum_uniforms += outcome.uniforms
        tally.n_histogram[outcome.n] += 1
        if outcome.y == 0:
            tally.joint_y0[outcome.n] += 1
        n_outer = getattr(outcome, "n_outer", None)
        if n_outer is not None:
            tally.sum_n_outer += n_outer
            tally.outer_histogram[n_outer] += 1
    logger.debug(f"Chunk {job.chunk_index} at p={job.p}: {tally.count} outputs, {tally.truncations} truncations")
    return tally


def plan_chunks(spec: ExperimentSpec, expression: str) -> list[ChunkJob]:
    """All chunk jobs of an experiment, grid point by grid point."""
    jobs = []
    for p_index, p in enumerate(spec.p_grid):
        chunks = math.ceil(spec.replications / spec.chunk_size)
        for chunk_index in range(chunks):
            size = min(spec.chunk_size, spec.replications - chunk_index * spec.chunk_size)
            jobs.append(
                ChunkJob(
                    expression=expression,
                    algorithm=spec.algorithm,
                    dyadic_shortcut=spec.dyadic_shortcut,
                    digit_ceiling=spec.digit_ceiling,
                    max_inputs=spec.max_inputs,
                    seed=spec.seed,
                    p=p,
                    p_index=p_index,
                    chunk_index=chunk_index,
                    size=size,
                ),
            )
    return jobs


def _safe_reference(factory: Factory, p: float) -> Optional[Reference]:
    try:
        return factory.reference(p)
    except (FactoryError, ValueError, NotImplementedError) as reference_exception:
        logger.warning(f"No exact reference for {factory.name} at p={p}: {reference_exception}")
        return None


def summarize(
    p: float,
    tally: Tally,
    factory: Factory,
    spec: ExperimentSpec,
    gate_sigmas: float,
) -> PointRecord:
    """Turn the merged tally of one grid point into a record with gates."""
    completed = tally.count
    if completed == 0:
        raise TruncationError(f"Every replication at p={p} hit the input cap", cap=spec.max_inputs or 0)
    mean_y = tally.sum_y / completed
    mean_n, sd_n = stats.moments(completed, tally.sum_n, tally.sum_n_squared)
    mean_n_ci = stats.normal_interval(mean_n, sd_n, completed, spec.confidence) if completed > 1 else (mean_n, mean_n)
    tail = stats.tail_curve(tally.n_histogram, completed)

    record = PointRecord(
        p=p,
        completed=completed,
        truncations=tally.truncations,
        mean_y=mean_y,
        mean_y_ci=stats.wilson_interval(tally.sum_y, completed, spec.confidence),
        mean_n=mean_n,
        sd_n=sd_n,
        mean_n_ci=mean_n_ci,
        mean_uniforms=tally.sum_uniforms / completed,
        mean_n_outer=tally.sum_n_outer / completed if tally.outer_histogram else None,
        max_n=max(tally.n_histogram),
        tail=tail if spec.wants(Statistic.TAIL) else None,
        n_histogram=dict(sorted(tally.n_histogram.items())),
        joint_y0=dict(sorted(tally.joint_y0.items())) if spec.wants(Statistic.JOINT) else None,
        outer_histogram=dict(sorted(tally.outer_histogram.items())) if tally.outer_histogram else None,
    )

    reference = _safe_reference(factory, p)
    if reference is not None and spec.wants(Statistic.REFERENCE):
        record.reference_f = reference.f
        record.reference_n = reference.expected_n
    if reference is not None and spec.wants(Statistic.MEAN_Y):
        f = min(max(reference.f.value, 0.0), 1.0)
        z = stats.z_score(mean_y, f, math.sqrt(f * (1.0 - f) / completed), slack=reference.f.error_bound)
        record.z_scores["mean_y"] = z
        record.checks["mean_y"] = abs(z) <= gate_sigmas
    if reference is not None and reference.expected_n is not None and spec.wants(Statistic.MEAN_N) and completed > 1:
        z = stats.z_score(mean_n, reference.expected_n.value, sd_n / math.sqrt(completed), reference.expected_n.error_bound)
        record.z_scores["mean_n"] = z
        record.checks["mean_n"] = abs(z) <= gate_sigmas
    if spec.wants(Statistic.TAIL) and factory.tail_bound(p, 1) is not None:
        passed, worst = tail_gate(tail, completed, lambda n: factory.tail_bound(p, n), gate_sigmas)
        record.z_scores["tail"] = worst
        record.checks["tail"] = passed

    for name, passed in record.checks.items():
        if not passed:
            logger.warning(f"Gate {name} failed for {factory.name} at p={p} (z={record.z_scores[name]:.2f})")
    if tally.truncations:
        logger.warning(f"{tally.truncations} replications of {factory.name} at p={p} hit the input cap")
    return record


def run(spec: ExperimentSpec, gate_sigmas: Optional[float] = None) -> RunReport:
    """Run an experiment.

    Args:
        spec (ExperimentSpec): What to run.
        gate_sigmas (float, optional): Width of the statistical gates in
            standard errors; defaults to the configured value (4).

    Returns:
        RunReport: One record per grid point, in grid order.
    """
    gate_sigmas = gate_sigmas or get_settings().gate_sigmas
    expression = str(parse_expression(spec.expression))
    factory = _factory_for(expression, spec.algorithm, spec.dyadic_shortcut, spec.digit_ceiling, spec.max_inputs)
    jobs = plan_chunks(spec, expression)
    logger.info(
        f"Running {expression} ({spec.algorithm.value}) at {len(spec.p_grid)} points, "
        f"M={spec.replications}, {len(jobs)} chunks, {spec.workers} workers",
    )

    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as executor:
            tallies = list(executor.map(run_chunk, jobs))
    else:
        tallies = [run_chunk(job) for job in jobs]

    merged = [Tally() for _ in spec.p_grid]
    for job, tally in zip(jobs, tallies):
        merged[job.p_index].merge(tally)

    points = []
    for p, tally in zip(spec.p_grid, merged):
        points.append(summarize(p, tally, factory, spec, gate_sigmas))
        logger.info(f"p={p}: mean Y {points[-1].mean_y:.6f}, mean N {points[-1].mean_n:.6f}")

    return RunReport(
        expression=expression,
        algorithm=spec.algorithm,
        seed=spec.seed,
        replications=spec.replications,
        confidence=spec.confidence,
        gate_sigmas=gate_sigmas,
        points=points,
    )
