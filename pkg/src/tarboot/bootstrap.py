"""Restricted residual bootstrap for the supLM test.

Pseudo-series are regenerated from the null AR fit by resampling its
re-centred residuals, each pseudo-series is re-fitted and re-tested with the
same kernel as the observed data, and the p-value is the fraction of
bootstrap statistics at least as large as the observed one.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import lfilter, lfiltic

from .arfit import ARFit
from .core import RngSeed, TimeSeries, as_series
from .exceptions import DegenerateResiduals, TooManyFailures
from .suplm import (
    DEFAULT_LOWER_Q,
    DEFAULT_UPPER_Q,
    SupLMResult,
    conditioning_length,
    suplm_batch,
    suplm_statistic,
)

#: Replicates pushed through the kernel together. Fixed, so results never
#: depend on how work is split.
CHUNK = 128

MAX_FAILURE_RATE = 0.05


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 399
    seed: RngSeed = RngSeed()
    p: int = 1
    d: int = 1
    lower_q: float = DEFAULT_LOWER_Q
    upper_q: float = DEFAULT_UPPER_Q
    freeze_grid: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")


@dataclass
class BootstrapReport:
    observed: SupLMResult
    boot_stats: np.ndarray
    p_value: float
    replicates: int
    failures: List[Tuple[int, str]] = field(default_factory=list)
    seed: Optional[RngSeed] = None

    @property
    def statistic(self) -> float:
        return self.observed.statistic

    @property
    def n_failures(self) -> int:
        return len(self.failures)

    def reject(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def bootstrap_p_value(observed: float, boot_stats) -> float:
    """Fraction of bootstrap statistics >= the observed statistic."""
    boot_stats = np.asarray(boot_stats, dtype=np.float64)
    if boot_stats.size == 0:
        raise ValueError("no bootstrap statistics")
    return float(np.count_nonzero(boot_stats >= observed) / boot_stats.size)


def _centred(fit: ARFit) -> np.ndarray:
    e = np.asarray(fit.residuals, dtype=np.float64)
    c = e - e.mean()
    if e.size == 0 or np.ptp(e) <= 1e-14 * max(1.0, float(np.max(np.abs(e)))):
        raise DegenerateResiduals("all re-centred residuals are identical")
    return c


def resample_batch(fit: ARFit, n: int, streams, initial_values=None) -> np.ndarray:
    """One bootstrap series per stream, stacked as rows of an ``(m, n)`` array.

    The first ``len(initial_values)`` entries of every row are the given
    initial values (default: the fit's own); the rest follow the fitted AR
    recursion driven by resampled re-centred residuals.
    """
    centred = _centred(fit)
    init = fit.initial_values if initial_values is None else np.asarray(initial_values, float)
    p = fit.order
    h = init.size
    if h < p:
        raise ValueError(f"need at least {p} initial values, got {h}")
    if n < h:
        raise ValueError(f"n={n} is shorter than the {h} initial values")
    streams = list(streams)
    m = len(streams)
    u = np.empty((m, n - h))
    for i, s in enumerate(streams):
        idx = s.generator().integers(0, centred.size, size=n - h)
        u[i] = centred[idx]
    u += fit.coeffs[0]
    if p == 0:
        body = u
    else:
        a = np.concatenate(([1.0], -np.asarray(fit.coeffs[1:], float)))
        zi = lfiltic([1.0], a, y=init[::-1][:p])
        body = lfilter([1.0], a, u, axis=1, zi=np.tile(zi, (m, 1)))[0]
    out = np.empty((m, n))
    out[:, :h] = init
    out[:, h:] = body
    return out


def resample_series(fit: ARFit, n: int, rng: RngSeed, initial_values=None) -> TimeSeries:
    """A single bootstrap pseudo-series of length ``n``."""
    return TimeSeries(resample_batch(fit, n, [rng], initial_values)[0])


def _chunk(series_values, fit, cfg, grid, ids):
    m0 = conditioning_length(cfg.p, cfg.d)
    xb = resample_batch(fit, series_values.size, [cfg.seed.stream(b) for b in ids],
                        series_values[:m0])
    res = suplm_batch(xb, cfg.p, cfg.d, cfg.lower_q, cfg.upper_q, grid=grid)
    fails = [
        (b, f"{res.error[j].__name__}: {res.message[j]}")
        for j, b in enumerate(ids) if res.error[j] is not None
    ]
    return res.statistic, fails


def bootstrap_statistics(series: TimeSeries, fit: ARFit, cfg: BootstrapConfig, grid=None,
                         workers: int = 1):
    """Bootstrap statistics for replicates ``1..B``.

    Returns ``(stats, failures)`` where ``stats`` has NaN for failed
    replicates and ``failures`` lists ``(b, reason)``. Replicate ``b`` always
    uses stream ``b`` of ``cfg.seed`` and chunk boundaries are fixed, so the
    result does not depend on ``workers``.
    """
    chunks = [
        list(range(s + 1, min(s + CHUNK, cfg.replicates) + 1))
        for s in range(0, cfg.replicates, CHUNK)
    ]
    args = (series.values, fit, cfg, grid)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, *zip(*[args + (ids,) for ids in chunks])))
    else:
        parts = [_chunk(*args, ids) for ids in chunks]
    stats = np.concatenate([p[0] for p in parts])
    failures = [f for p in parts for f in p[1]]
    return stats, failures


def bootstrap_test(series, cfg: BootstrapConfig, workers: int = 1) -> BootstrapReport:
    """Observed supLM statistic with its restricted-bootstrap p-value."""
    series = as_series(series)
    observed = suplm_statistic(series, cfg.p, cfg.d, cfg.lower_q, cfg.upper_q)
    grid = observed.grid if cfg.freeze_grid else None
    stats, failures = bootstrap_statistics(series, observed.fit, cfg, grid=grid, workers=workers)
    if len(failures) > MAX_FAILURE_RATE * cfg.replicates:
        raise TooManyFailures(
            f"{len(failures)} of {cfg.replicates} bootstrap replicates failed "
            f"(first: {failures[0][1]})",
            failures=len(failures), total=cfg.replicates,
        )
    ok = stats[~np.isnan(stats)]
    return BootstrapReport(
        observed=observed,
        boot_stats=ok,
        p_value=bootstrap_p_value(observed.statistic, ok),
        replicates=cfg.replicates,
        failures=failures,
        seed=cfg.seed,
    )
