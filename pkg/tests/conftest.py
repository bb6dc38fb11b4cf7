"""Shared helpers: random competing-risks datasets for property tests."""

import numpy as np

from ciftest import Sample, Status, Subject, validate_sample
from ciftest.survival import Jitter


def random_sample(
    rng: np.random.Generator,
    n: int,
    censor: bool = True,
    truncate: bool = True,
    label: str = "",
) -> Sample:
    """A messy but valid sample: exp events, uniform censoring, gamma entries."""
    subjects = []
    while len(subjects) < n:
        t = rng.exponential()
        cause = 1 if rng.random() < 0.6 else 2
        c = rng.uniform(0.2, 3.0) if censor else np.inf
        entry = rng.gamma(0.75, 1.5) if truncate and rng.random() < 0.4 else 0.0
        if entry >= min(t, c):
            continue
        status = Status(cause) if t <= c else Status.CENSORED
        subjects.append(Subject(entry, float(min(t, c)), status))
    return validate_sample(subjects, Jitter(int(rng.integers(0, 2**63))), label=label)


def uncensored_sample(rng: np.random.Generator, n: int, label: str = "") -> Sample:
    subjects = [
        Subject(0.0, float(rng.exponential()), Status(1 if rng.random() < 0.5 else 2))
        for _ in range(n)
    ]
    return validate_sample(subjects, Jitter(int(rng.integers(0, 2**63))), label=label)
