"""Data model and one-sample estimators for competing risks data.

Subjects carry a delayed entry (left-truncation) time, an exit time and
an event status (censored, cause 1 or cause 2).  On top of that sit the
counting-process building blocks: the at-risk process, the cause-specific
counting processes, the Kaplan-Meier estimator of all-cause survival and
the Aalen-Johansen estimators of the two cumulative incidence functions.
All estimators accommodate independent right-censoring and independent
left-truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    EmptyRiskSet,
    EmptySample,
    NonPositiveDuration,
    TiesPresent,
)
from .seeding import spawn_rng

__all__ = [
    "Status",
    "Subject",
    "Sample",
    "StepFunction",
    "Grid",
    "Jitter",
    "Reject",
    "validate_sample",
    "risk_and_counting",
    "risk_at",
    "kaplan_meier",
    "aalen_johansen",
    "event_grid",
]


class Status(IntEnum):
    """Event status code: 0 = censored, 1 = cause 1, 2 = cause 2."""

    CENSORED = 0
    CAUSE1 = 1
    CAUSE2 = 2


@dataclass(frozen=True)
class Subject:
    """One observation: entry time, exit time and event status.

    ``entry`` is the left-truncation time (0 for an untruncated subject);
    the subject is under observation on ``(entry, exit]``.
    """

    entry: float
    exit: float
    status: Status


class Sample:
    """An ordered collection of subjects forming one comparison group.

    Build validated instances through :func:`validate_sample`; estimators
    assume pairwise distinct exit times within a sample.
    """

    def __init__(self, subjects: Sequence[Subject], label: str = ""):
        if len(subjects) == 0:
            raise EmptySample(f"sample {label!r} contains no subjects")
        self.subjects = tuple(subjects)
        self.label = label
        self.entry = np.array([s.entry for s in self.subjects], dtype=float)
        self.exit = np.array([s.exit for s in self.subjects], dtype=float)
        self.status = np.array([int(s.status) for s in self.subjects], dtype=np.int8)
        # sorted copies back the O(log n) risk-set lookups
        self._entry_sorted = np.sort(self.entry)
        self._exit_sorted = np.sort(self.exit)

    @property
    def n(self) -> int:
        return len(self.subjects)

    def event_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Observed events as ``(times, causes)`` sorted by time."""
        mask = self.status != Status.CENSORED
        times = self.exit[mask]
        causes = self.status[mask]
        order = np.argsort(times, kind="mergesort")
        return times[order], causes[order]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Sample(n={self.n}, label={self.label!r})"


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function given by jump times ``x`` and values ``y``.

    Evaluation is right-continuous by default: ``f(t)`` is the value
    attached to the last jump at or before ``t`` and ``initial`` before the
    first jump.  ``side="left"`` switches the lookup to strict inequality,
    i.e. the value attached to a jump holds on the half-open interval
    *after* it.  The at-risk process uses this mode so that ``Y(t)`` reads
    as the count just before ``t``.
    """

    x: np.ndarray
    y: np.ndarray
    initial: float = 0.0
    side: str = "right"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
            raise ValueError("jump times and values must be 1-d and equally long")
        if len(x) > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("jump times must be strictly increasing")
        if self.side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def _eval(self, t, lookup_side: str):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.x, t, side=lookup_side) - 1
        if len(self.y) == 0:
            out = np.full(t.shape, self.initial)
        else:
            out = np.where(idx >= 0, self.y[np.maximum(idx, 0)], self.initial)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self._eval(t, "right" if self.side == "right" else "left")

    def value_left(self, t):
        """Left limit: the value of the function just before ``t``."""
        # a side="left" carrier is left-continuous, so f(t-) = f(t)
        return self._eval(t, "left")


@dataclass(frozen=True)
class Grid:
    """Strictly increasing time points spanning the analysis interval.

    The first and last points are the interval endpoints; in between sit
    (at least) all observed event times of the samples under comparison.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise ValueError("a grid needs at least the two interval endpoints")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])

    @property
    def cell_widths(self) -> np.ndarray:
        return np.diff(self.points)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Jitter:
    """Break tied exits with seeded normal noise, sd = 1e-6 x exit range."""

    seed: int = 0


@dataclass(frozen=True)
class Reject:
    """Fail with :class:`TiesPresent` when tied exits occur."""


TiePolicy = Union[Jitter, Reject]

_JITTER_REL_SIGMA = 1e-6


def validate_sample(
    raw: Iterable[Subject], tie_policy: TiePolicy = Jitter(0), label: str = ""
) -> Sample:
    """Validate subjects and return a :class:`Sample` with distinct exits.

    Checks finiteness, non-negative times and strictly positive durations.
    Tied exit times are either rejected or broken by adding seeded
    zero-mean normal noise with standard deviation ``1e-6`` times the
    range of the exit times; the jitter is re-drawn (deterministically)
    until exits are pairwise distinct and all durations stay positive.
    Subject order is preserved.
    """
    subjects = list(raw)
    if not subjects:
        raise EmptySample(f"sample {label!r} contains no subjects")
    entry = np.array([s.entry for s in subjects], dtype=float)
    exit_ = np.array([s.exit for s in subjects], dtype=float)
    if not (np.all(np.isfinite(entry)) and np.all(np.isfinite(exit_))):
        raise NonPositiveDuration("entry and exit times must be finite")
    if np.any(entry < 0):
        raise NonPositiveDuration("entry times must be non-negative")
    if np.any(exit_ <= entry):
        i = int(np.argmax(exit_ <= entry))
        raise NonPositiveDuration(
            f"subject {i}: exit {exit_[i]} is not after entry {entry[i]}"
        )

    def tied_mask(values: np.ndarray) -> np.ndarray:
        _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
        return counts[inverse] > 1

    ties = tied_mask(exit_)
    if ties.any():
        if isinstance(tie_policy, Reject):
            raise TiesPresent(
                f"{int(ties.sum())} tied exit times in sample {label!r}"
            )
        rng = spawn_rng(tie_policy.seed)
        span = float(exit_.max() - exit_.min())
        sigma = _JITTER_REL_SIGMA * span if span > 0 else _JITTER_REL_SIGMA
        jittered = exit_.copy()
        for _ in range(100):
            redo = tied_mask(jittered)
            bad = jittered <= entry
            if not (redo.any() or bad.any()):
                break
            redo |= bad
            jittered[redo] = exit_[redo] + sigma * rng.standard_normal(int(redo.sum()))
        else:  # pragma: no cover - needs adversarially degenerate data
            raise TiesPresent(f"could not break ties in sample {label!r}")
        exit_ = jittered

    fixed = [
        Subject(float(e), float(x), Status(int(st)))
        for e, x, st in zip(entry, exit_, (s.status for s in subjects))
    ]
    return Sample(fixed, label=label)


def risk_at(sample: Sample, times) -> np.ndarray:
    """Number at risk just before each time: ``#{i: entry_i < t <= exit_i}``."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    entered = np.searchsorted(sample._entry_sorted, t, side="left")
    exited = np.searchsorted(sample._exit_sorted, t, side="left")
    return entered - exited


def risk_and_counting(sample: Sample) -> tuple[StepFunction, StepFunction, StepFunction]:
    """Return ``(Y, N1, N2)`` for a validated sample.

    ``Y`` evaluates to the number at risk just before the query time
    (left-continuous count, stored with ``side="left"``); ``N1``/``N2``
    are the right-continuous, non-decreasing counts of observed cause-1
    and cause-2 events.
    """
    changes = np.unique(np.concatenate([sample.entry, sample.exit]))
    entered = np.searchsorted(sample._entry_sorted, changes, side="right")
    exited = np.searchsorted(sample._exit_sorted, changes, side="right")
    y = StepFunction(changes, (entered - exited).astype(float), 0.0, side="left")

    counting = []
    for cause in (Status.CAUSE1, Status.CAUSE2):
        times = np.sort(sample.exit[sample.status == cause])
        counting.append(StepFunction(times, np.arange(1, len(times) + 1, dtype=float)))
    return y, counting[0], counting[1]


def _event_estimates(sample: Sample):
    """Per-event quantities shared by the estimators.

    Returns ``(times, causes, y, s_left, s, f1, f2)`` where all arrays are
    aligned with the sample's observed events sorted by time: the number
    at risk, the Kaplan-Meier value just before and at the event, and the
    right-continuous Aalen-Johansen values at the event.
    """
    times, causes = sample.event_table()
    y = risk_at(sample, times).astype(float)
    # a subject is at risk at its own event time, so y >= 1 here; the
    # guard keeps the documented Y=0 convention for degenerate queries
    with np.errstate(divide="ignore", invalid="ignore"):
        hazard = np.where(y > 0, 1.0 / y, 0.0)
    s = np.cumprod(1.0 - hazard)
    s_left = np.concatenate([[1.0], s[:-1]])
    increments = s_left * hazard
    f1 = np.cumsum(np.where(causes == Status.CAUSE1, increments, 0.0))
    f2 = np.cumsum(np.where(causes == Status.CAUSE2, increments, 0.0))
    return times, causes, y, s_left, s, f1, f2


def kaplan_meier(sample: Sample) -> StepFunction:
    """Product-limit estimator of all-cause survival ``P(T > t)``.

    Factors with an empty risk set are skipped (treated as one).
    """
    times, _, _, _, s, _, _ = _event_estimates(sample)
    return StepFunction(times, s, 1.0)


def aalen_johansen(sample: Sample, cause: int) -> StepFunction:
    """Aalen-Johansen estimator of the cumulative incidence of ``cause``.

    ``F(t)`` sums ``S(u-) / Y(u)`` over the observed cause-specific event
    times ``u <= t``; terms with an empty risk set are zero.
    """
    if cause not in (1, 2):
        raise ValueError("cause must be 1 or 2")
    times, causes, _, _, _, f1, f2 = _event_estimates(sample)
    cum = f1 if cause == 1 else f2
    mask = causes == cause
    return StepFunction(times[mask], cum[mask], 0.0)


def event_grid(
    sample1: Sample,
    sample2: Sample,
    interval: tuple[float, float],
    check_risk_set: bool = True,
) -> Grid:
    """Sorted union of the interval endpoints and all in-interval events.

    With ``check_risk_set`` (the default) each sample must still have a
    non-empty risk set at the right endpoint, which is the finite-sample
    counterpart of the positivity condition the asymptotics rest on.
    """
    t1, t2 = float(interval[0]), float(interval[1])
    if not t1 < t2:
        raise ValueError(f"invalid interval [{t1}, {t2}]")
    if check_risk_set:
        for sample in (sample1, sample2):
            if risk_at(sample, t2)[0] < 1:
                raise EmptyRiskSet(
                    f"sample {sample.label!r} has an empty risk set at t2={t2}"
                )
    times = []
    for sample in (sample1, sample2):
        ev, _ = sample.event_table()
        times.append(ev[(ev >= t1) & (ev <= t2)])
    points = np.unique(np.concatenate([[t1, t2], *times]))
    return Grid(points)
