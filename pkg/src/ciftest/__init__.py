"""Two-sample equality tests for cumulative incidence functions.

Wild bootstrap Kolmogorov-Smirnov, Cramer-von Mises and Pepe tests plus
Box and Pearson chi-square approximation tests for competing risks data
under independent right-censoring and left-truncation, with a Monte
Carlo harness for rejection-rate studies.
"""

__version__ = "0.1.0"

from .approximation import box_test, chi2_cdf, chi2_quantile, pearson_test
from .covariance import (
    CovGrid,
    covariance_moments,
    group_covariance,
    pooled_covariance,
)
from .errors import CifTestError
from .resampling import (
    BootstrapConfig,
    MultiplierLaw,
    TestResult,
    bootstrap_process,
    bootstrap_test,
    bootstrap_tests,
    draw_multipliers,
)
from .statistics import (
    DiffProcess,
    StatKind,
    Statistic,
    cvm_stat,
    ks_stat,
    pepe_stat,
    studentize_cvm,
    w_process,
)
from .survival import (
    Grid,
    Jitter,
    Reject,
    Sample,
    Status,
    StepFunction,
    Subject,
    aalen_johansen,
    event_grid,
    kaplan_meier,
    risk_and_counting,
    validate_sample,
)
from .weights import AndersonDarlingWeight, ConstantWeight, TabulatedWeight, Weight

__all__ = [
    "__version__",
    "Status",
    "Subject",
    "Sample",
    "StepFunction",
    "Grid",
    "Jitter",
    "Reject",
    "validate_sample",
    "risk_and_counting",
    "kaplan_meier",
    "aalen_johansen",
    "event_grid",
    "Weight",
    "ConstantWeight",
    "AndersonDarlingWeight",
    "TabulatedWeight",
    "CovGrid",
    "group_covariance",
    "pooled_covariance",
    "covariance_moments",
    "StatKind",
    "Statistic",
    "DiffProcess",
    "w_process",
    "ks_stat",
    "cvm_stat",
    "pepe_stat",
    "studentize_cvm",
    "MultiplierLaw",
    "BootstrapConfig",
    "TestResult",
    "draw_multipliers",
    "bootstrap_process",
    "bootstrap_test",
    "bootstrap_tests",
    "chi2_quantile",
    "chi2_cdf",
    "box_test",
    "pearson_test",
    "CifTestError",
]
