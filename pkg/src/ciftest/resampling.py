"""Wild bootstrap engine for the CIF equality tests.

Observed martingale increments are perturbed by i.i.d. mean-zero,
variance-one multipliers, one per observed event, and the resulting
resampled difference process is pushed through the same statistic
functionals as the data.  Monte Carlo order statistics of the replicate
statistics give the critical values and p-values.

Multipliers for one replicate are drawn for the pooled, time-ordered
event list of both samples and then attached to the owning sample; this
makes the replicate stream invariant under swapping the two samples.
Replicate ``b`` draws from its own stream derived from ``seed`` and
``b``, so replicates can be evaluated in any order (or in parallel) with
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .covariance import event_influence_matrix
from .errors import MultiplierCountMismatch
from .seeding import spawn_rng
from .statistics import DiffProcess, StatKind, grid_statistic, w_process
from .survival import Grid, Sample, StepFunction, Status, event_grid
from .weights import ConstantWeight, Weight

__all__ = [
    "MultiplierLaw",
    "BootstrapConfig",
    "TestResult",
    "draw_multipliers",
    "bootstrap_process",
    "bootstrap_test",
    "bootstrap_tests",
    "bootstrap_replicates",
]


class MultiplierLaw(Enum):
    """Multiplier distributions: mean 0, variance 1, finite fourth moment."""

    STANDARD_NORMAL = "normal"
    RADEMACHER = "rademacher"
    CENTERED_POISSON1 = "poisson"


def draw_multipliers(law: MultiplierLaw, count: int, rng: np.random.Generator):
    """Draw ``count`` i.i.d. multipliers from ``law``."""
    if law is MultiplierLaw.STANDARD_NORMAL:
        return rng.standard_normal(count)
    if law is MultiplierLaw.RADEMACHER:
        return 2.0 * rng.integers(0, 2, size=count) - 1.0
    if law is MultiplierLaw.CENTERED_POISSON1:
        return rng.poisson(1.0, size=count) - 1.0
    raise ValueError(f"unknown multiplier law {law!r}")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 999
    law: MultiplierLaw = MultiplierLaw.STANDARD_NORMAL
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test: ``reject`` iff ``statistic > critical``."""

    statistic: float
    critical: float
    p_value: float
    reject: bool
    method: str
    extras: dict = field(default_factory=dict)


def _events_upto(sample: Sample, t_max: float) -> tuple[np.ndarray, np.ndarray]:
    times, causes = sample.event_table()
    keep = times <= t_max
    return times[keep], causes[keep]


def cause1_events_in(sample: Sample, t1: float, t2: float) -> int:
    """Observed cause-1 events of the sample inside ``[t1, t2]``."""
    times, causes = sample.event_table()
    return int(np.sum((causes == Status.CAUSE1) & (times >= t1) & (times <= t2)))


def bootstrap_process(
    sample1: Sample,
    sample2: Sample,
    grid: Grid,
    g1: np.ndarray,
    g2: np.ndarray,
) -> DiffProcess:
    """Resampled difference process for one set of multipliers.

    ``g1``/``g2`` hold one multiplier per observed event of the
    respective sample with event time up to the grid end, ordered by
    event time (the order of ``Sample.event_table``).
    """
    a1 = event_influence_matrix(sample1, grid.points)
    a2 = event_influence_matrix(sample2, grid.points)
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if g1.shape != (a1.shape[0],) or g2.shape != (a2.shape[0],):
        raise MultiplierCountMismatch(
            f"expected {a1.shape[0]} + {a2.shape[0]} multipliers, "
            f"got {g1.shape} + {g2.shape}"
        )
    n1, n2 = sample1.n, sample2.n
    scale = np.sqrt(n1 * n2 / (n1 + n2))
    values = scale * (g1 @ a1 - g2 @ a2)
    return DiffProcess(StepFunction(grid.points, values), grid, n1, n2)


def bootstrap_replicates(
    sample1: Sample,
    sample2: Sample,
    grid: Grid,
    config: BootstrapConfig,
) -> np.ndarray:
    """Resampled process values on the grid, one replicate per row."""
    a1 = event_influence_matrix(sample1, grid.points)
    a2 = event_influence_matrix(sample2, grid.points)
    t1 = _events_upto(sample1, grid.points[-1])[0]
    t2 = _events_upto(sample2, grid.points[-1])[0]
    e1, e2 = len(t1), len(t2)
    order = np.argsort(np.concatenate([t1, t2]), kind="mergesort")
    g1 = np.empty((config.B, e1))
    g2 = np.empty((config.B, e2))
    pooled = np.empty(e1 + e2)
    for b in range(config.B):
        draws = draw_multipliers(config.law, e1 + e2, spawn_rng(config.seed, b))
        pooled[order] = draws
        g1[b] = pooled[:e1]
        g2[b] = pooled[e1:]
    scale = np.sqrt(sample1.n * sample2.n / (sample1.n + sample2.n))
    return scale * (g1 @ a1 - g2 @ a2)


def _order_statistic_critical(stats: np.ndarray, alpha: float) -> float:
    # ceil((1-alpha)(B+1))-th order statistic; +inf when that exceeds B
    b = len(stats)
    k = int(np.ceil((1.0 - alpha) * (b + 1)))
    if k > b:
        return float("inf")
    return float(np.partition(stats, k - 1)[k - 1])


def bootstrap_tests(
    sample1: Sample,
    sample2: Sample,
    interval: tuple[float, float],
    kinds: Sequence[StatKind],
    weights: Mapping[StatKind, Weight],
    config: BootstrapConfig,
    check_risk_set: bool = True,
    grid: Grid | None = None,
) -> dict[StatKind, TestResult]:
    """Run several wild bootstrap tests on one shared replicate set.

    The replicate processes are computed once; each requested statistic
    functional is applied to the data and to every replicate.  Runs where
    either sample has no cause-1 event inside the interval report
    ``p_value = 1`` and no rejection for every statistic.
    """
    if grid is None:
        grid = event_grid(sample1, sample2, interval, check_risk_set)
    d = w_process(sample1, sample2, grid)
    degenerate = (
        cause1_events_in(sample1, *grid.interval) == 0
        or cause1_events_in(sample2, *grid.interval) == 0
    )
    base_extras = {
        "B": config.B,
        "alpha": config.alpha,
        "multiplier": config.law.value,
        "seed": config.seed,
    }
    results: dict[StatKind, TestResult] = {}
    if degenerate:
        for kind in kinds:
            t_obs = float(grid_statistic(kind, grid, d.values, weights[kind]))
            results[kind] = TestResult(
                statistic=t_obs,
                critical=float("inf"),
                p_value=1.0,
                reject=False,
                method=kind.value,
                extras={**base_extras, "no_cause1_events": True},
            )
        return results

    boot = bootstrap_replicates(sample1, sample2, grid, config)
    for kind in kinds:
        weight = weights[kind]
        t_obs = float(grid_statistic(kind, grid, d.values, weight))
        t_rep = np.asarray(grid_statistic(kind, grid, boot, weight), dtype=float)
        critical = _order_statistic_critical(t_rep, config.alpha)
        p_value = (1.0 + float(np.sum(t_rep >= t_obs))) / (config.B + 1.0)
        results[kind] = TestResult(
            statistic=t_obs,
            critical=critical,
            p_value=p_value,
            reject=bool(t_obs > critical),
            method=kind.value,
            extras={**base_extras, "weight": weight.describe()},
        )
    return results


def bootstrap_test(
    sample1: Sample,
    sample2: Sample,
    interval: tuple[float, float],
    statistic_kind: StatKind,
    weight: Weight = ConstantWeight(),
    config: BootstrapConfig = BootstrapConfig(),
    check_risk_set: bool = True,
) -> TestResult:
    """Wild bootstrap test for one statistic; see :func:`bootstrap_tests`.

    The Pepe statistic is compared one-sided against the upper tail of
    its signed replicates; KS and CvM are non-negative to begin with.
    """
    results = bootstrap_tests(
        sample1,
        sample2,
        interval,
        [statistic_kind],
        {statistic_kind: weight},
        config,
        check_risk_set,
    )
    return results[statistic_kind]
