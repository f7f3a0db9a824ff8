"""
Monte Carlo oracle for M|G|∞ started at a busy-period start.

Each replication puts customer 0 in service at t = 0, draws the later arrivals
of a Poisson(λ) stream on [0, horizon] and their services from the model's
inverse CDF, and records N(t) on the grid. Nothing here integrates G; only
the sampler is shared with the analytic side.

Replication r draws from its own stream, SeedSequence(seed, spawn_key=(r,)),
and chunks are reduced with exact integer sums, so the output does not depend
on the number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import kstest

from src.mginf.busy_period import BusyPeriodLaw, busy_mean
from src.mginf.errors import RunawayError, ShapeError
from src.mginf.service_models import ServiceModel, sample
from src.mginf.transient_engine import MomentCurve

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2048
ATOM_THRESHOLD = 1e-9
Z_THRESHOLD = 4.0
KS_LEVEL = 0.01
# busy periods longer than this many mean inter-arrival times are runaway
SAFETY_FACTOR = 1e6


class SimConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    lam: float = Field(alias="lambda", gt=0)
    replications: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    horizon: float = Field(gt=0)
    t_grid: tuple[float, ...] = ()
    workers: int = Field(default=1, ge=1)
    # pmf estimates cover 0..n_max; larger counts share one overflow cell
    n_max: int = Field(default=40, ge=0)
    safety_horizon: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _grid_inside_horizon(self):
        if any(t < 0 for t in self.t_grid):
            raise ValueError("t_grid must be non-negative")
        if self.t_grid and max(self.t_grid) > self.horizon:
            raise ValueError(f"horizon {self.horizon} must cover max(t_grid) = {max(self.t_grid)}")
        return self

    @property
    def runaway_length(self) -> float:
        return self.safety_horizon if self.safety_horizon is not None else SAFETY_FACTOR / self.lam


@dataclass(frozen=True)
class SimEstimate:
    value: float
    std_error: float
    replications: int


@dataclass(frozen=True)
class StateEstimates:
    grid: np.ndarray
    mean: list[SimEstimate]
    variance: list[SimEstimate]
    # pmf[i][n] estimates P(N(grid[i]) = n), n = 0..n_max
    pmf: list[list[SimEstimate]]
    overflow: list[SimEstimate]

    def curve(self, kind: str) -> list[SimEstimate]:
        return self.mean if kind == "mean" else self.variance


@dataclass(frozen=True)
class BusyPeriodSample:
    lengths: np.ndarray
    replications: int

    @property
    def mean(self) -> SimEstimate:
        return _sample_mean(self.lengths)

    @property
    def atom_fraction(self) -> SimEstimate:
        return _proportion(int(np.count_nonzero(self.lengths < ATOM_THRESHOLD)), self.lengths.size)


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication,)))


def _chunks(replications: int) -> list[range]:
    return [range(lo, min(lo + CHUNK_SIZE, replications)) for lo in range(0, replications, CHUNK_SIZE)]


def _map_chunks(fn, config: SimConfig) -> list:
    chunks = _chunks(config.replications)
    if config.workers == 1 or len(chunks) == 1:
        return [fn(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, chunks))


def _path_counts(config: SimConfig, model: ServiceModel, grid: np.ndarray, replication: int) -> np.ndarray:
    rng = replication_rng(config.seed, replication)
    first = sample(model, rng.random())
    n = rng.poisson(config.lam * config.horizon)
    arrivals = rng.uniform(0.0, config.horizon, n)
    services = sample(model, rng.random(n))
    departures = arrivals + services
    present = (arrivals[:, None] <= grid[None, :]) & (grid[None, :] < departures[:, None])
    return (grid < first).astype(np.int64) + present.sum(axis=0)


def simulate_state(config: SimConfig, model: ServiceModel) -> StateEstimates:
    """Estimates of p₁′ₙ(t), μ(1′,t) and V(1′,t) on config.t_grid."""
    grid = np.asarray(config.t_grid, dtype=float)
    if grid.size == 0:
        raise ShapeError("simulate_state needs a non-empty t_grid")
    cells = config.n_max + 2

    def run_chunk(chunk: range) -> tuple[np.ndarray, np.ndarray]:
        # object dtype: exact Python-int power sums, no int64 wraparound for large counts
        powers = np.zeros((4, grid.size), dtype=object)
        histogram = np.zeros((grid.size, cells), dtype=np.int64)
        for r in chunk:
            counts = _path_counts(config, model, grid, r)
            exact = counts.astype(object)
            powers += np.stack([exact, exact**2, exact**3, exact**4])
            histogram[np.arange(grid.size), np.minimum(counts, cells - 1)] += 1
        logger.debug("state chunk %d-%d done", chunk.start, chunk.stop - 1)
        return powers, histogram

    results = _map_chunks(run_chunk, config)
    powers = sum(p for p, _ in results)
    histogram = sum(h for _, h in results)
    R = config.replications
    mean, variance, pmf, overflow = [], [], [], []
    for i in range(grid.size):
        m, v = _moments_from_power_sums([int(x) for x in powers[:, i]], R)
        mean.append(m)
        variance.append(v)
        pmf.append([_proportion(int(c), R) for c in histogram[i, :-1]])
        overflow.append(_proportion(int(histogram[i, -1]), R))
    return StateEstimates(grid=grid, mean=mean, variance=variance, pmf=pmf, overflow=overflow)


def _moments_from_power_sums(sums: Sequence[int], R: int) -> tuple[SimEstimate, SimEstimate]:
    """Mean and unbiased variance estimates from exact ΣN, ΣN², ΣN³, ΣN⁴."""
    s1, s2, s3, s4 = (int(s) for s in sums)
    mu = s1 / R
    if R < 2:
        return SimEstimate(mu, 0.0, R), SimEstimate(0.0, 0.0, R)
    # R²·m2 and R⁴·m4 as exact integers; only the final ratios are rounded
    c2 = R * s2 - s1 * s1
    c4 = R**3 * s4 - 4 * R * R * s1 * s3 + 6 * R * s1 * s1 * s2 - 3 * s1**4
    var = c2 / (R * (R - 1))
    spread = (c4 - c2 * c2) / R**4
    return (
        SimEstimate(mu, math.sqrt(max(var, 0.0) / R), R),
        SimEstimate(var, math.sqrt(max(spread, 0.0) / R), R),
    )


def _proportion(hits: int, R: int) -> SimEstimate:
    p = hits / R
    se = math.sqrt(p * (1.0 - p) / (R - 1)) if R > 1 else 0.0
    return SimEstimate(p, se, R)


def _sample_mean(values: np.ndarray) -> SimEstimate:
    R = values.size
    mu = math.fsum(values) / R
    se = float(np.std(values, ddof=1)) / math.sqrt(R) if R > 1 else 0.0
    return SimEstimate(mu, se, R)


def _busy_length(config: SimConfig, model: ServiceModel, replication: int) -> float:
    rng = replication_rng(config.seed, replication)
    limit = config.runaway_length
    end = sample(model, rng.random())
    now = 0.0
    while True:
        if end > limit:
            raise RunawayError(replication, end, limit)
        now += rng.exponential(1.0 / config.lam)
        if now > end:
            return end
        end = max(end, now + sample(model, rng.random()))


def simulate_busy_period(config: SimConfig, model: ServiceModel) -> BusyPeriodSample:
    """Busy-period lengths, one per replication, in replication order."""

    def run_chunk(chunk: range) -> np.ndarray:
        return np.array([_busy_length(config, model, r) for r in chunk])

    lengths = np.concatenate(_map_chunks(run_chunk, config))
    return BusyPeriodSample(lengths=lengths, replications=config.replications)


# -- engine vs simulator -----------------------------------------------------


@dataclass
class ComparisonReport:
    kind: str
    points: list[dict] = field(default_factory=list)
    max_abs_z: float = 0.0
    z_threshold: float = Z_THRESHOLD
    ks_statistic: Optional[float] = None
    ks_pvalue: Optional[float] = None
    ks_level: Optional[float] = None
    atom: Optional[dict] = None
    mean: Optional[dict] = None
    printed_reference: Optional[list[dict]] = None
    passed: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def z_score(analytic: float, estimate: SimEstimate) -> float:
    diff = analytic - estimate.value
    if estimate.std_error == 0:
        return 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)
    return diff / estimate.std_error


def _point(t: Optional[float], analytic: float, estimate: SimEstimate) -> dict:
    out = {} if t is None else {"t": t}
    out.update(
        analytic=analytic,
        estimate=estimate.value,
        std_error=estimate.std_error,
        z=z_score(analytic, estimate),
    )
    return out


def compare_curve(
    analytic: MomentCurve,
    simulated: StateEstimates,
    printed: Optional[MomentCurve] = None,
    z_threshold: float = Z_THRESHOLD,
) -> ComparisonReport:
    """Per-point z-scores of an analytic μ or V curve against simulated estimates."""
    estimates = simulated.curve(analytic.kind)
    if len(analytic.grid) != len(simulated.grid) or not np.allclose(analytic.grid, simulated.grid, rtol=0, atol=1e-12):
        raise ShapeError("analytic and simulated grids differ")
    report = ComparisonReport(kind=analytic.kind, z_threshold=z_threshold)
    report.points = [
        _point(float(t), float(a), e) for t, a, e in zip(analytic.grid, analytic.values, estimates)
    ]
    report.max_abs_z = max(abs(p["z"]) for p in report.points)
    report.passed = report.max_abs_z <= z_threshold
    if printed is not None:
        report.printed_reference = [
            _point(float(t), float(v), e) for t, v, e in zip(printed.grid, printed.values, estimates)
        ]
    return report


def compare_busy_period(
    law: BusyPeriodLaw,
    simulated: BusyPeriodSample,
    level: float = KS_LEVEL,
    z_threshold: float = Z_THRESHOLD,
) -> ComparisonReport:
    """
    Atom and mean by z-score; the continuous part by Kolmogorov–Smirnov against
    (B(t) − B(0)) / (1 − B(0)).
    """
    report = ComparisonReport(kind="busy-period", z_threshold=z_threshold, ks_level=level)
    report.atom = _point(None, law.atom_at_zero, simulated.atom_fraction)
    report.mean = _point(None, busy_mean(law), simulated.mean)
    report.max_abs_z = max(abs(report.atom["z"]), abs(report.mean["z"]))
    passed = report.max_abs_z <= z_threshold

    continuous = simulated.lengths[simulated.lengths >= ATOM_THRESHOLD]
    atom = law.atom_at_zero
    if continuous.size > 0 and atom < 1.0:

        def continuous_cdf(x):
            return (np.array([law.cdf(float(v)) for v in np.atleast_1d(x)]) - atom) / (1.0 - atom)

        result = kstest(continuous, continuous_cdf)
        report.ks_statistic = float(result.statistic)
        report.ks_pvalue = float(result.pvalue)
        passed = passed and report.ks_pvalue >= level
    report.passed = passed
    return report


def compare(
    analytic: Union[MomentCurve, BusyPeriodLaw],
    simulated: Union[StateEstimates, BusyPeriodSample],
    **kwargs,
) -> ComparisonReport:
    if isinstance(analytic, MomentCurve) and isinstance(simulated, StateEstimates):
        return compare_curve(analytic, simulated, **kwargs)
    if isinstance(analytic, BusyPeriodLaw) and isinstance(simulated, BusyPeriodSample):
        return compare_busy_period(analytic, simulated, **kwargs)
    raise ShapeError(f"cannot compare {type(analytic).__name__} with {type(simulated).__name__}")
