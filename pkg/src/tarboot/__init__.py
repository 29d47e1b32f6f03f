"""Bootstrap and asymptotic supLM tests for threshold effects in autoregressions."""

__version__ = "0.1.0"

from .arfit import ARFit, fit_ar, select_order_aic
from .asymptotic import LimitSimConfig, asymptotic_critical_values, asymptotic_test
from .bootstrap import BootstrapConfig, BootstrapReport, bootstrap_test, resample_series
from .core import ARParams, RngSeed, TARParams, TimeSeries, simulate_ar, simulate_tar
from .exceptions import *  # noqa: F401,F403
from .montecarlo import (
    ExperimentDesign,
    OrderPolicy,
    RejectionTable,
    run_order_selection_experiment,
    run_power_experiment,
    run_size_experiment,
)
from .report import TestReport
from .spectrum import Periodogram, periodogram
from .suplm import (
    InfoBlocks,
    SupLMResult,
    ThresholdGrid,
    build_grid,
    information_blocks,
    lm_at_threshold,
    score_psi,
    suplm_statistic,
)
