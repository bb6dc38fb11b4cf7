"""Covariance estimation for the two-sample CIF difference process.

The group covariance accumulates, over a sample's observed events, outer
products of the per-event influence terms that also drive the wild
bootstrap; the pooled (Welch-type) estimator mixes the two groups with
swapped sample-size weights.  The first three moment functionals of the
pooled covariance feed the Box and Pearson approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InadmissibleWeight
from .survival import Grid, Sample, Status, _event_estimates, risk_at
from .weights import Weight

__all__ = [
    "CovGrid",
    "event_influence_matrix",
    "group_covariance",
    "pooled_covariance",
    "covariance_moments",
]


@dataclass(frozen=True)
class CovGrid:
    """Symmetric covariance matrix evaluated at all grid-point pairs."""

    grid: Grid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.grid), len(self.grid)):
            raise GridMismatch("matrix shape does not match the grid")
        object.__setattr__(self, "matrix", m)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)


def event_influence_matrix(sample: Sample, grid_points: np.ndarray) -> np.ndarray:
    """Per-event influence terms of the CIF estimator on the grid.

    Row ``e`` (events sorted by time, all observed events of the sample up
    to the last grid point) evaluated at grid point ``s`` is::

        1{u_e <= s} * (base_e - F1(s)) / Y(u_e)

    with ``base_e = 1 - F2(u_e)`` for a cause-1 event and ``F1(u_e)`` for
    a cause-2 event, all quantities right-continuous at ``u_e``.  Events
    before the interval start contribute; those after the last grid point
    do not and are dropped.
    """
    g = np.asarray(grid_points, dtype=float)
    times, causes, y, _, _, f1, f2 = _event_estimates(sample)
    keep = times <= g[-1]
    times, causes = times[keep], causes[keep]
    y, f1, f2 = y[keep], f1[keep], f2[keep]
    if len(times) == 0:
        return np.zeros((0, len(g)))
    base = np.where(causes == Status.CAUSE1, 1.0 - f2, f1)
    # F1 at a grid point = value at the last event at or before it
    idx = np.searchsorted(times, g, side="right")
    f1_at_grid = np.concatenate([[0.0], f1])[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_y = np.where(y > 0, 1.0 / y, 0.0)
    indicator = times[:, None] <= g[None, :]
    return indicator * (base[:, None] - f1_at_grid[None, :]) * inv_y[:, None]


def group_covariance(sample: Sample, grid: Grid) -> CovGrid:
    """Single-group covariance estimate on all grid-point pairs.

    Every observed event up to the interval end contributes the outer
    product of its influence row, scaled by the sample size; the result is
    symmetric and positive semi-definite by construction.  Events inside
    the interval must be grid points (the estimate is piecewise constant
    on grid cells only then).
    """
    t1, t2 = grid.interval
    ev, _ = sample.event_table()
    inside = ev[(ev >= t1) & (ev <= t2)]
    if not np.all(np.isin(inside, grid.points)):
        raise GridMismatch(
            f"grid is missing event times of sample {sample.label!r}"
        )
    a = event_influence_matrix(sample, grid.points)
    return CovGrid(grid, sample.n * (a.T @ a))


def pooled_covariance(z1: CovGrid, z2: CovGrid, n1: int, n2: int) -> CovGrid:
    """Welch-type pooling: ``(n2/n) z1 + (n1/n) z2`` entrywise."""
    if not np.array_equal(z1.grid.points, z2.grid.points):
        raise GridMismatch("covariance grids differ")
    n = n1 + n2
    return CovGrid(z1.grid, (n2 / n) * z1.matrix + (n1 / n) * z2.matrix)


def covariance_moments(
    z: CovGrid, rho2: Weight, max_grid: int | None = None
) -> tuple[float, float, float]:
    """Exact cell-sum moment functionals ``(mu, sigma2, gamma)``.

    The covariance is piecewise constant on grid cells (left-endpoint
    convention in both coordinates), so with per-cell weight integrals
    ``w_i`` the single, double and triple integrals reduce to weighted
    matrix traces::

        mu     = sum_i w_i z_ii
        sigma2 = 2 sum_ij w_i w_j z_ij^2
        gamma  = sum_ijk w_i w_j w_k z_ij z_jk z_ki

    ``max_grid`` optionally coarsens the grid (keeping endpoints) before
    the cubic-cost ``gamma`` sum; the result is then an approximation.
    """
    if not rho2.moment_admissible:
        raise InadmissibleWeight(
            f"weight {rho2.describe()} cannot be used for moment integrals"
        )
    grid, matrix = z.grid, z.matrix
    m = len(grid) - 1  # number of cells
    if max_grid is not None and m > max_grid:
        stride = int(np.ceil(m / max_grid))
        keep = np.unique(np.r_[np.arange(0, len(grid), stride), len(grid) - 1])
        grid = Grid(grid.points[keep])
        matrix = matrix[np.ix_(keep, keep)]
    w = rho2.cell_integrals(grid)
    core = matrix[:-1, :-1]  # left-endpoint value on each cell pair
    mu = float(np.diag(core) @ w)
    sigma2 = 2.0 * float(w @ (core * core) @ w)
    scaled = w[:, None] * core
    gamma = float(np.sum(scaled * (scaled @ scaled).T))
    return mu, sigma2, gamma
