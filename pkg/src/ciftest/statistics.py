"""The two-sample difference process and the scalar test statistics.

The difference process is the scaled gap between the two groups'
cause-1 cumulative incidence estimates on the event grid.  From it come
the weighted Kolmogorov-Smirnov supremum, the weighted Cramer-von Mises
integral, the signed Pepe integral and the studentized Cramer-von Mises
statistic.  All integrals are exact cell sums over the grid because the
process is piecewise constant between events.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateVariance
from .survival import Grid, Sample, StepFunction, aalen_johansen
from .weights import ConstantWeight, Weight

__all__ = [
    "StatKind",
    "DiffProcess",
    "Statistic",
    "w_process",
    "ks_stat",
    "cvm_stat",
    "pepe_stat",
    "studentize_cvm",
    "grid_statistic",
]

DEGENERATE_EPS = 1e-12


class StatKind(Enum):
    KS = "ks"
    CVM = "cvm"
    CVM_STUD = "cvm_stud"
    PEPE = "pepe"


@dataclass(frozen=True)
class DiffProcess:
    """Scaled CIF difference ``sqrt(n1 n2 / n) (F1_hat^(1) - F1_hat^(2))``.

    ``w`` is the step function with jumps exactly at the grid points, so
    ``w.y`` holds the process values aligned with ``grid.points``.
    """

    w: StepFunction
    grid: Grid
    n1: int
    n2: int

    @property
    def values(self) -> np.ndarray:
        return self.w.y

    @property
    def interval(self) -> tuple[float, float]:
        return self.grid.interval


@dataclass(frozen=True)
class Statistic:
    kind: StatKind
    value: float
    weight: Weight | None = None


def w_process(sample1: Sample, sample2: Sample, grid: Grid) -> DiffProcess:
    """Evaluate the scaled two-sample CIF difference on the grid."""
    n1, n2 = sample1.n, sample2.n
    scale = np.sqrt(n1 * n2 / (n1 + n2))
    f1 = aalen_johansen(sample1, 1)(grid.points)
    f2 = aalen_johansen(sample2, 1)(grid.points)
    values = scale * (f1 - f2)
    return DiffProcess(StepFunction(grid.points, values), grid, n1, n2)


def _weighted_sup(values: np.ndarray, rho: np.ndarray) -> float:
    # 0 * inf := 0 so that an unbounded endpoint weight only matters
    # where the process is actually non-zero
    contrib = np.where(values != 0.0, rho * np.abs(values), 0.0)
    return float(np.max(contrib))


def ks_stat(d: DiffProcess, rho1: Weight = ConstantWeight()) -> Statistic:
    """Weighted Kolmogorov-Smirnov statistic ``sup rho1 |W|``.

    The supremum is taken over the grid points, which is exact for the
    default constant weight because the process is constant between them.
    """
    rho = np.asarray(rho1.at(d.grid.points, d.interval), dtype=float)
    return Statistic(StatKind.KS, _weighted_sup(d.values, rho), rho1)


def cvm_stat(d: DiffProcess, rho2: Weight = ConstantWeight()) -> Statistic:
    """Weighted Cramer-von Mises statistic ``int rho2 W^2 du``."""
    w = rho2.cell_integrals(d.grid)
    value = float(d.values[:-1] ** 2 @ w)
    return Statistic(StatKind.CVM, value, rho2)


def pepe_stat(d: DiffProcess, rho2: Weight = ConstantWeight()) -> Statistic:
    """Signed integral ``int rho2 W du`` (one-sided, for ordered CIFs)."""
    w = rho2.cell_integrals(d.grid)
    return Statistic(StatKind.PEPE, float(d.values[:-1] @ w), rho2)


def studentize_cvm(t_cvm: float, mu: float, sigma2: float) -> Statistic:
    """Studentized Cramer-von Mises statistic ``(T - mu) / sigma``."""
    if sigma2 <= DEGENERATE_EPS:
        raise DegenerateVariance(
            f"variance estimate {sigma2} is degenerate (no events in interval?)"
        )
    return Statistic(StatKind.CVM_STUD, (t_cvm - mu) / float(np.sqrt(sigma2)))


def grid_statistic(
    kind: StatKind, grid: Grid, values: np.ndarray, weight: Weight
) -> np.ndarray:
    """Statistic functional applied row-wise to process values on the grid.

    ``values`` has shape ``(..., len(grid))``; used to evaluate the same
    functional on the observed process and on bootstrap replicates.
    """
    if kind is StatKind.KS:
        rho = np.asarray(weight.at(grid.points, grid.interval), dtype=float)
        contrib = np.where(values != 0.0, rho * np.abs(values), 0.0)
        return np.max(contrib, axis=-1)
    w = weight.cell_integrals(grid)
    if kind is StatKind.CVM:
        return values[..., :-1] ** 2 @ w
    if kind is StatKind.PEPE:
        return values[..., :-1] @ w
    raise ValueError(f"no grid functional for {kind}")
