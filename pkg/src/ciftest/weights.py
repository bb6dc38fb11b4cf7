"""Weight functions for the weighted test statistics.

A weight knows how to evaluate itself at time points and how to integrate
itself exactly over the cells of a :class:`~ciftest.survival.Grid`, which
is all the step-function statistics need.  The Anderson-Darling weight is
integrable but unbounded at the interval endpoints and is not admissible
for the chi-square moment computations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .survival import Grid

__all__ = ["Weight", "ConstantWeight", "AndersonDarlingWeight", "TabulatedWeight"]


class Weight:
    """Base class; concrete weights are strictly positive on the interval."""

    #: whether the weight may enter the Box/Pearson moment integrals
    moment_admissible = True

    def at(self, t, interval) -> np.ndarray:
        raise NotImplementedError

    def cell_integrals(self, grid: Grid) -> np.ndarray:
        """Integral of the weight over each grid cell ``[g_i, g_{i+1})``."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(Weight):
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("constant weight must be positive")

    def at(self, t, interval):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def cell_integrals(self, grid):
        return self.value * grid.cell_widths

    def describe(self):
        return f"const({self.value:g})"


@dataclass(frozen=True)
class AndersonDarlingWeight(Weight):
    """``rho(u) = ((t2 - u) (u - t1))**-0.5``; infinite at the endpoints."""

    moment_admissible = False

    def at(self, t, interval):
        t1, t2 = interval
        t = np.asarray(t, dtype=float)
        prod = (t2 - t) * (t - t1)
        with np.errstate(divide="ignore"):
            return np.where(prod > 0, prod ** -0.5, np.inf)

    def cell_integrals(self, grid):
        # antiderivative 2*arcsin(sqrt((u - t1)/(t2 - t1))) is exact per cell
        t1, t2 = grid.interval
        z = np.clip((grid.points - t1) / (t2 - t1), 0.0, 1.0)
        anti = 2.0 * np.arcsin(np.sqrt(z))
        return np.diff(anti)

    def describe(self):
        return "anderson-darling"


@dataclass(frozen=True)
class TabulatedWeight(Weight):
    """Weight given by linear interpolation of ``(times, values)`` pairs.

    Cell integrals use the midpoint rule; the discretization error of the
    covariance estimator dominates that of the quadrature.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise ValueError("need matching 1-d arrays with at least two knots")
        if not np.all(np.diff(times) > 0):
            raise ValueError("tabulation times must be strictly increasing")
        if not np.all(values > 0):
            raise ValueError("tabulated weight values must be positive")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def at(self, t, interval):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)

    def cell_integrals(self, grid):
        mid = 0.5 * (grid.points[:-1] + grid.points[1:])
        return np.interp(mid, self.times, self.values) * grid.cell_widths

    def describe(self):
        return f"tabulated({len(self.times)} knots)"
