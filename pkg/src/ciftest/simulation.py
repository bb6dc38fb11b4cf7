"""Data-generating processes and the Monte Carlo rejection-rate harness.

Three families of two-group competing risks models are provided: two
odds/power-transform set-ups with closed-form CIFs (one under the null
when its effect parameter is zero, one with crossing CIFs) and a
hazard-specified set-up whose groups coincide when its rate parameter is
one.  Event times are drawn by analytic inversion of the conditional
CIFs.  Censoring (uniform or per-group exponential) and fractional gamma
left-truncation are layered on top; truncated subjects that fail before
entry are redrawn so the configured group sizes are the observed ones.

The harness replays a scenario ``n_sim`` times, runs the requested tests
at the configured level and reports rejection proportions with Monte
Carlo standard errors.  Everything is reproducible from the scenario
seed; replications draw from per-index streams, so parallel execution
matches serial execution exactly.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from functools import lru_cache, partial
from multiprocessing import Pool
from pathlib import Path
from typing import Union

import numpy as np
from scipy import integrate, optimize

from .approximation import box_test, pearson_test
from .covariance import covariance_moments, group_covariance, pooled_covariance
from .errors import ScenarioError
from .resampling import (
    BootstrapConfig,
    MultiplierLaw,
    TestResult,
    bootstrap_tests,
    cause1_events_in,
)
from .seeding import spawn_rng, spawn_seed
from .statistics import StatKind, cvm_stat, w_process
from .survival import Jitter, Sample, Status, Subject, event_grid, validate_sample
from .weights import ConstantWeight

__all__ = [
    "ModelBK1",
    "ModelBK2",
    "ModelDP3",
    "UniformCensoring",
    "ExponentialCensoring",
    "GammaFractionTruncation",
    "Scenario",
    "RejectionRow",
    "RejectionTable",
    "cif",
    "all_cause_survival",
    "sample_event",
    "apply_incompleteness",
    "generate_sample",
    "calibrate_uniform_censoring",
    "monte_carlo",
    "load_scenario",
    "METHODS",
]

METHODS = ("ks", "cvm", "box", "pearson", "pepe")

_BOOTSTRAP_METHODS = {"ks": StatKind.KS, "cvm": StatKind.CVM, "pepe": StatKind.PEPE}


@dataclass(frozen=True)
class ModelBK1:
    """Odds-transform model; groups share all CIFs when ``beta == 0``."""

    p: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ScenarioError("p must be in (0, 1)")


@dataclass(frozen=True)
class ModelBK2:
    """Power-transform model with crossing cause-1 CIFs.

    Group 1 carries the power transform (exponent ``exp(beta)``), group 2
    the plain proportional form; with the reference parameters the cause-1
    CIFs cross and their difference integrates to nearly zero over the
    analysis interval.
    """

    p1: float
    p2: float
    beta: float

    def __post_init__(self):
        for name, value in (("p1", self.p1), ("p2", self.p2)):
            if not 0.0 < value < 1.0:
                raise ScenarioError(f"{name} must be in (0, 1)")


@dataclass(frozen=True)
class ModelDP3:
    """Hazard-specified model; ``c == 1`` makes the two groups equal in law.

    Group 1 has cause-1 hazard ``exp(-u)`` and cause-2 hazard
    ``1 - exp(-u)``; group 2 has constant hazards ``c`` and ``2 - c``.
    """

    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ScenarioError("c must be in [0, 1]")


Model = Union[ModelBK1, ModelBK2, ModelDP3]


@dataclass(frozen=True)
class UniformCensoring:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ScenarioError("censoring bounds must satisfy a < b")
        if self.a < 0:
            raise ScenarioError("censoring bound a must be non-negative")


@dataclass(frozen=True)
class ExponentialCensoring:
    """Per-group exponential censoring rates; a rate of 0 means uncensored."""

    rate1: float
    rate2: float

    def __post_init__(self):
        if self.rate1 < 0 or self.rate2 < 0:
            raise ScenarioError("censoring rates must be non-negative")

    def rate(self, group: int) -> float:
        return self.rate1 if group == 1 else self.rate2


@dataclass(frozen=True)
class GammaFractionTruncation:
    """A random fraction of subjects gets a gamma-distributed entry time."""

    shape: float
    scale: float
    fraction: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ScenarioError("truncation shape and scale must be positive")
        if not 0.0 <= self.fraction <= 1.0:
            raise ScenarioError("truncation fraction must be in [0, 1]")


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration.

    ``truncation_sizes`` fixes what ``(n1, n2)`` mean under truncation:
    ``"latent"`` draws that many individuals per group and drops the
    truncated-away ones (group sizes shrink at random), ``"observed"``
    redraws until that many subjects enter the study.  Without truncation
    the two modes coincide.
    """

    scenario_id: str
    model: Model
    n1: int
    n2: int
    censoring: UniformCensoring | ExponentialCensoring | None
    truncation: GammaFractionTruncation | None
    interval: tuple[float, float]
    n_sim: int
    bootstrap: BootstrapConfig
    tests: tuple[str, ...] = METHODS
    truncation_sizes: str = "latent"

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ScenarioError("n1 and n2 must be at least 1")
        if not self.interval[0] < self.interval[1]:
            raise ScenarioError("interval must satisfy t1 < t2")
        if self.n_sim < 1:
            raise ScenarioError("n_sim must be at least 1")
        unknown = set(self.tests) - set(METHODS)
        if unknown:
            raise ScenarioError(f"tests contains unknown methods {sorted(unknown)}")
        if not self.tests:
            raise ScenarioError("tests must name at least one method")
        if self.truncation_sizes not in ("latent", "observed"):
            raise ScenarioError("truncation_sizes must be 'latent' or 'observed'")


@dataclass(frozen=True)
class RejectionRow:
    test: str
    proportion: float
    se: float
    wallclock_s: float


@dataclass(frozen=True)
class RejectionTable:
    scenario_id: str
    n_sim: int
    rows: tuple[RejectionRow, ...]

    def proportion(self, test: str) -> float:
        for row in self.rows:
            if row.test == test:
                return row.proportion
        raise KeyError(test)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario_id", "test", "proportion", "se", "wallclock_s"])
            for row in self.rows:
                writer.writerow(
                    [self.scenario_id, row.test, repr(row.proportion),
                     repr(row.se), f"{row.wallclock_s:.3f}"]
                )


# -- closed-form model quantities -------------------------------------------


def cif(model: Model, group: int, cause: int, t) -> np.ndarray:
    """Cumulative incidence ``P(T <= t, cause)`` of the model, vectorized."""
    t = np.asarray(t, dtype=float)
    x = -np.expm1(-t)  # 1 - exp(-t)
    if isinstance(model, ModelBK1):
        q = model.p * np.exp(model.beta * (1.0 if group == 2 else 0.0))
        if cause == 1:
            return q * x / (1.0 - model.p + q * x)
        return (1.0 - model.p) * x / (1.0 - model.p + q)
    if isinstance(model, ModelBK2):
        a = np.exp(model.beta * (1.0 if group == 1 else 0.0))
        pk = model.p1 if group == 1 else model.p2
        if cause == 1:
            return (1.0 - pk) * x**a
        return pk * x
    if isinstance(model, ModelDP3):
        x2 = -np.expm1(-2.0 * t)
        if group == 1:
            return 0.5 * x2 if cause == 1 else x - 0.5 * x2
        frac = model.c / 2.0 if cause == 1 else 1.0 - model.c / 2.0
        return frac * x2
    raise TypeError(f"unknown model {model!r}")


def all_cause_survival(model: Model, group: int, t) -> np.ndarray:
    """``P(T > t)`` of the model, vectorized."""
    return 1.0 - cif(model, group, 1, t) - cif(model, group, 2, t)


def sample_event(model: Model, group: int, rng: np.random.Generator):
    """Draw one ``(time, cause)`` pair by inverting the conditional CIFs."""
    if group not in (1, 2):
        raise ValueError("group must be 1 or 2")
    if isinstance(model, ModelBK1):
        q = model.p * np.exp(model.beta * (1.0 if group == 2 else 0.0))
        if rng.random() < q / (1.0 - model.p + q):
            u = rng.random()
            x = u * (1.0 - model.p) / (1.0 - model.p + q * (1.0 - u))
            return -np.log1p(-x), 1
        return rng.standard_exponential(), 2
    if isinstance(model, ModelBK2):
        a = np.exp(model.beta * (1.0 if group == 1 else 0.0))
        pk = model.p1 if group == 1 else model.p2
        if rng.random() < 1.0 - pk:
            x = rng.random() ** (1.0 / a)
            return -np.log1p(-x), 1
        return rng.standard_exponential(), 2
    if isinstance(model, ModelDP3):
        if group == 1:
            t = rng.standard_exponential()
            return t, (1 if rng.random() < np.exp(-t) else 2)
        t = 0.5 * rng.standard_exponential()
        return t, (1 if rng.random() < model.c / 2.0 else 2)
    raise TypeError(f"unknown model {model!r}")


def apply_incompleteness(
    event: tuple[float, int],
    censoring: UniformCensoring | ExponentialCensoring | None,
    truncation: GammaFractionTruncation | None,
    rng: np.random.Generator,
    group: int = 1,
) -> Subject | None:
    """Censor and truncate one latent event; ``None`` means never observed.

    A censoring time is drawn first, then (with the configured fraction)
    a gamma entry time; a subject whose entry time is not strictly before
    ``min(T, C)`` never enters the study and must be redrawn by the
    caller.
    """
    t, cause = event
    c = np.inf
    if isinstance(censoring, UniformCensoring):
        c = rng.uniform(censoring.a, censoring.b)
    elif isinstance(censoring, ExponentialCensoring):
        rate = censoring.rate(group)
        if rate > 0:
            c = rng.exponential(1.0 / rate)
    entry = 0.0
    if truncation is not None and rng.random() < truncation.fraction:
        entry = rng.gamma(truncation.shape, truncation.scale)
    observed = min(t, c)
    if entry >= observed:
        return None
    status = Status(cause) if t <= c else Status.CENSORED
    return Subject(entry, float(observed), status)


def generate_sample(
    model: Model,
    group: int,
    size: int,
    censoring,
    truncation,
    rng: np.random.Generator,
    label: str = "",
    sizes: str = "observed",
) -> Sample:
    """Draw one group's subjects.

    ``sizes="observed"`` redraws past truncation rejections until ``size``
    subjects enter the study; ``sizes="latent"`` draws ``size`` individuals
    and keeps whichever enter (redrawing the whole group in the measure-zero
    case that none do).
    """
    subjects: list[Subject] = []
    if sizes == "observed":
        attempts = 0
        while len(subjects) < size:
            attempts += 1
            if attempts > 1000 * size + 1000:
                raise ScenarioError(
                    "truncation rejects nearly every subject; check the configuration"
                )
            subj = apply_incompleteness(
                sample_event(model, group, rng), censoring, truncation, rng, group
            )
            if subj is not None:
                subjects.append(subj)
    elif sizes == "latent":
        while not subjects:
            drawn = (
                apply_incompleteness(
                    sample_event(model, group, rng), censoring, truncation, rng, group
                )
                for _ in range(size)
            )
            subjects = [s for s in drawn if s is not None]
    else:
        raise ScenarioError("sizes must be 'latent' or 'observed'")
    jitter_seed = int(rng.integers(0, 2**63))
    return validate_sample(subjects, Jitter(jitter_seed), label=label)


@lru_cache(maxsize=None)
def calibrate_uniform_censoring(model: Model, target: float) -> UniformCensoring:
    """Uniform censoring law ``U(0, b)`` hitting a marginal censoring rate.

    ``target`` is the probability (averaged over both groups, before any
    truncation) that a subject is censored; ``b`` is found by
    root-finding to within 0.1 per cent.
    """
    if not 0.0 < target < 1.0:
        raise ScenarioError("censoring target must be in (0, 1)")

    def censored_probability(b: float) -> float:
        prob = 0.0
        for group in (1, 2):
            integral, _ = integrate.quad(
                lambda u: all_cause_survival(model, group, u), 0.0, b, limit=200
            )
            prob += 0.5 * integral / b
        return prob

    hi = 1.0
    while censored_probability(hi) > target:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover
            raise ScenarioError("cannot calibrate censoring bound")
    b = optimize.brentq(
        lambda x: censored_probability(x) - target, 1e-9, hi, xtol=1e-10, rtol=1e-12
    )
    assert abs(censored_probability(b) - target) < 1e-3
    return UniformCensoring(0.0, float(b))


# -- Monte Carlo harness -----------------------------------------------------


def _run_replication(scenario: Scenario, rep: int) -> dict[str, tuple[bool, float]]:
    """One replication: returns per-test (reject, attributed seconds)."""
    rng = spawn_rng(scenario.bootstrap.seed, 1, rep)
    sample1 = generate_sample(
        scenario.model, 1, scenario.n1, scenario.censoring, scenario.truncation,
        rng, label="group1", sizes=scenario.truncation_sizes,
    )
    sample2 = generate_sample(
        scenario.model, 2, scenario.n2, scenario.censoring, scenario.truncation,
        rng, label="group2", sizes=scenario.truncation_sizes,
    )
    t1, t2 = scenario.interval
    out: dict[str, tuple[bool, float]] = {}
    # no cause-1 event in a sample: every test counts as a non-rejection
    if cause1_events_in(sample1, t1, t2) == 0 or cause1_events_in(sample2, t1, t2) == 0:
        return {test: (False, 0.0) for test in scenario.tests}

    grid = event_grid(sample1, sample2, scenario.interval, check_risk_set=False)
    boot_methods = [m for m in scenario.tests if m in _BOOTSTRAP_METHODS]
    if boot_methods:
        start = time.perf_counter()
        kinds = [_BOOTSTRAP_METHODS[m] for m in boot_methods]
        config = replace(scenario.bootstrap, seed=spawn_seed(scenario.bootstrap.seed, 2, rep))
        results = bootstrap_tests(
            sample1, sample2, scenario.interval, kinds,
            {kind: ConstantWeight() for kind in kinds}, config,
            check_risk_set=False, grid=grid,
        )
        share = (time.perf_counter() - start) / len(boot_methods)
        for method in boot_methods:
            out[method] = (results[_BOOTSTRAP_METHODS[method]].reject, share)

    approx_methods = [m for m in scenario.tests if m in ("box", "pearson")]
    if approx_methods:
        start = time.perf_counter()
        z = pooled_covariance(
            group_covariance(sample1, grid),
            group_covariance(sample2, grid),
            sample1.n,
            sample2.n,
        )
        mu, sigma2, gamma = covariance_moments(z, ConstantWeight())
        t_cvm = cvm_stat(w_process(sample1, sample2, grid)).value
        alpha = scenario.bootstrap.alpha
        approx_results = {}
        if "box" in approx_methods:
            approx_results["box"] = box_test(t_cvm, mu, sigma2, alpha)
        if "pearson" in approx_methods:
            approx_results["pearson"] = pearson_test(t_cvm, mu, sigma2, gamma, alpha)
        share = (time.perf_counter() - start) / len(approx_methods)
        for method in approx_methods:
            out[method] = (approx_results[method].reject, share)
    return out


def monte_carlo(scenario: Scenario, n_jobs: int = 1) -> RejectionTable:
    """Rejection proportions of the requested tests over ``n_sim`` runs.

    Fully determined by the scenario (and its seed): replication ``r``
    generates data and bootstrap multipliers from streams derived from
    ``(seed, r)``, so results do not depend on ``n_jobs``.
    """
    reps = range(scenario.n_sim)
    if n_jobs > 1:
        with Pool(n_jobs) as pool:
            per_rep = pool.map(
                partial(_run_replication, scenario), reps, chunksize=8
            )
    else:
        per_rep = [_run_replication(scenario, rep) for rep in reps]

    rows = []
    for test in scenario.tests:
        rejections = sum(1 for rep in per_rep if rep[test][0])
        seconds = sum(rep[test][1] for rep in per_rep)
        proportion = rejections / scenario.n_sim
        se = float(np.sqrt(proportion * (1.0 - proportion) / scenario.n_sim))
        rows.append(RejectionRow(test, proportion, se, seconds))
    return RejectionTable(scenario.scenario_id, scenario.n_sim, tuple(rows))


# -- scenario files ----------------------------------------------------------


def _parse_kv(path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs[key.strip().lower()] = value.strip()
    return pairs


def _need(pairs: dict[str, str], key: str) -> str:
    if key not in pairs:
        raise ScenarioError(f"missing required scenario key {key!r}")
    return pairs[key]


def _as_float(pairs: dict[str, str], key: str) -> float:
    try:
        return float(_need(pairs, key))
    except ValueError as exc:
        raise ScenarioError(f"{key} must be a number") from exc


def _as_int(pairs: dict[str, str], key: str) -> int:
    try:
        return int(_need(pairs, key))
    except ValueError as exc:
        raise ScenarioError(f"{key} must be an integer") from exc


def load_scenario(path) -> Scenario:
    """Parse a declarative ``key = value`` scenario file.

    See the README for the full key reference.  Censoring may be given as
    an explicit law (``uniform A B`` or ``exponential L1 L2``) or as a
    marginal target (``target 0.25``) that is calibrated numerically for
    the configured model.
    """
    pairs = _parse_kv(path)
    kind = _need(pairs, "model").lower()
    model: Model
    if kind == "bk1":
        model = ModelBK1(p=_as_float(pairs, "p"), beta=_as_float(pairs, "beta"))
    elif kind == "bk2":
        model = ModelBK2(
            p1=_as_float(pairs, "p1"),
            p2=_as_float(pairs, "p2"),
            beta=_as_float(pairs, "beta"),
        )
    elif kind == "dp3":
        model = ModelDP3(c=_as_float(pairs, "c"))
    else:
        raise ScenarioError(f"model must be bk1, bk2 or dp3, not {kind!r}")

    cens_spec = pairs.get("censoring", "none").split()
    censoring: UniformCensoring | ExponentialCensoring | None
    if cens_spec[0] == "none":
        censoring = None
    elif cens_spec[0] == "uniform" and len(cens_spec) == 3:
        censoring = UniformCensoring(float(cens_spec[1]), float(cens_spec[2]))
    elif cens_spec[0] == "exponential" and len(cens_spec) == 3:
        censoring = ExponentialCensoring(float(cens_spec[1]), float(cens_spec[2]))
    elif cens_spec[0] == "target" and len(cens_spec) == 2:
        censoring = calibrate_uniform_censoring(model, float(cens_spec[1]))
    else:
        raise ScenarioError(f"cannot parse censoring spec {pairs.get('censoring')!r}")

    trunc_spec = pairs.get("truncation", "none").split()
    truncation: GammaFractionTruncation | None
    if trunc_spec[0] == "none":
        truncation = None
    elif trunc_spec[0] == "gamma" and len(trunc_spec) == 4:
        truncation = GammaFractionTruncation(
            float(trunc_spec[1]), float(trunc_spec[2]), float(trunc_spec[3])
        )
    else:
        raise ScenarioError(f"cannot parse truncation spec {pairs.get('truncation')!r}")

    interval_spec = _need(pairs, "interval").split()
    if len(interval_spec) != 2:
        raise ScenarioError("interval must be two numbers 'T1 T2'")
    interval = (float(interval_spec[0]), float(interval_spec[1]))

    alpha = _as_float(pairs, "alpha")
    if not 0.0 < alpha < 1.0:
        raise ScenarioError("alpha must be in (0, 1)")
    law_name = pairs.get("multiplier", "normal")
    try:
        law = MultiplierLaw(law_name)
    except ValueError as exc:
        raise ScenarioError(f"unknown multiplier law {law_name!r}") from exc
    bootstrap = BootstrapConfig(
        B=_as_int(pairs, "b"), law=law, alpha=alpha, seed=_as_int(pairs, "seed")
    )

    tests = tuple(_need(pairs, "tests").replace(",", " ").split())
    return Scenario(
        scenario_id=pairs.get("id", Path(path).stem),
        model=model,
        n1=_as_int(pairs, "n1"),
        n2=_as_int(pairs, "n2"),
        censoring=censoring,
        truncation=truncation,
        interval=interval,
        n_sim=_as_int(pairs, "n_sim"),
        bootstrap=bootstrap,
        tests=tests,
        truncation_sizes=pairs.get("truncation_sizes", "latent"),
    )
