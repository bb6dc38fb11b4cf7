"""Chi-square approximation tests for the Cramer-von Mises statistic.

The limit law of the CvM statistic is a weighted sum of independent
chi-square-1 variables.  The Box test matches its first two moments with
a scaled chi-square law ``g * chi2_f``; the Pearson test additionally
matches skewness through a studentized chi-square with estimated degrees
of freedom ``kappa``.  Both need only the moment functionals of the
pooled covariance estimate, no resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateMoments
from .resampling import TestResult
from .statistics import DEGENERATE_EPS, studentize_cvm

__all__ = [
    "BoxParams",
    "PearsonParams",
    "chi2_quantile",
    "chi2_cdf",
    "box_params",
    "pearson_kappa",
    "box_test",
    "pearson_test",
]


@dataclass(frozen=True)
class BoxParams:
    """Scaled chi-square parameters with ``g*f = mu`` and ``2 g^2 f = sigma2``."""

    f: float
    g: float


@dataclass(frozen=True)
class PearsonParams:
    kappa: float


def chi2_cdf(df: float, x) -> float:
    """Chi-square CDF with (possibly non-integer) ``df > 0`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, special.gammainc(df / 2.0, np.maximum(x, 0.0) / 2.0), 0.0)
    return float(out) if out.ndim == 0 else out


def chi2_quantile(df: float, p: float) -> float:
    """Inverse chi-square CDF via the inverse regularized incomplete gamma."""
    if df <= 0:
        raise ValueError("df must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return float(2.0 * special.gammaincinv(df / 2.0, p))


def box_params(mu: float, sigma2: float) -> BoxParams:
    """Moment-matching parameters ``f = 2 mu^2 / sigma2``, ``g = sigma2 / (2 mu)``."""
    return BoxParams(f=2.0 * mu * mu / sigma2, g=sigma2 / (2.0 * mu))


def pearson_kappa(sigma2: float, gamma: float) -> PearsonParams:
    """Skewness-matching degrees of freedom ``kappa = sigma2^3 / (8 gamma^2)``."""
    return PearsonParams(kappa=sigma2**3 / (8.0 * gamma * gamma))


def _degenerate(method: str, t_cvm: float, alpha: float, extras: dict) -> TestResult:
    # no-events convention: degenerate moments never reject
    return TestResult(
        statistic=t_cvm,
        critical=float("inf"),
        p_value=1.0,
        reject=False,
        method=method,
        extras={**extras, "degenerate_moments": True},
    )


def box_test(t_cvm: float, mu: float, sigma2: float, alpha: float = 0.05) -> TestResult:
    """Box approximation test: reject when ``T > g * chi2_quantile(f, 1-alpha)``."""
    extras = {"alpha": alpha, "mu": mu, "sigma2": sigma2}
    if mu <= DEGENERATE_EPS or sigma2 <= DEGENERATE_EPS:
        return _degenerate("box", t_cvm, alpha, extras)
    params = box_params(mu, sigma2)
    critical = params.g * chi2_quantile(params.f, 1.0 - alpha)
    p_value = 1.0 - chi2_cdf(params.f, t_cvm / params.g)
    return TestResult(
        statistic=t_cvm,
        critical=critical,
        p_value=p_value,
        reject=bool(t_cvm > critical),
        method="box",
        extras={**extras, "f": params.f, "g": params.g},
    )


def pearson_test(
    t_cvm: float, mu: float, sigma2: float, gamma: float, alpha: float = 0.05
) -> TestResult:
    """Pearson approximation test on the studentized CvM statistic.

    Rejects when ``(T - mu)/sigma`` exceeds the studentized chi-square
    ``(chi2_kappa - kappa)/sqrt(2 kappa)`` quantile.  A numerically
    non-positive ``gamma`` (possible after grid coarsening) falls back to
    the Box decision, flagged in the extras.
    """
    extras = {"alpha": alpha, "mu": mu, "sigma2": sigma2, "gamma": gamma}
    if mu <= DEGENERATE_EPS or sigma2 <= DEGENERATE_EPS:
        return _degenerate("pearson", t_cvm, alpha, extras)
    if gamma <= 0:
        fallback = box_test(t_cvm, mu, sigma2, alpha)
        return TestResult(
            statistic=fallback.statistic,
            critical=fallback.critical,
            p_value=fallback.p_value,
            reject=fallback.reject,
            method="pearson",
            extras={**extras, **fallback.extras, "gamma_fallback_box": True},
        )
    kappa = pearson_kappa(sigma2, gamma).kappa
    t_stud = studentize_cvm(t_cvm, mu, sigma2).value
    critical = (chi2_quantile(kappa, 1.0 - alpha) - kappa) / np.sqrt(2.0 * kappa)
    # CDF argument below zero means a statistic under the support: p = 1
    p_value = 1.0 - chi2_cdf(kappa, kappa + t_stud * np.sqrt(2.0 * kappa))
    return TestResult(
        statistic=t_stud,
        critical=float(critical),
        p_value=float(min(max(p_value, 0.0), 1.0)),
        reject=bool(t_stud > critical),
        method="pearson",
        extras={**extras, "kappa": kappa},
    )
