"""The supremum Lagrange multiplier statistic for a threshold effect in an AR(p).

The statistic is evaluated on a whole stack of series at once by
:func:`suplm_batch`. Information-matrix blocks for every candidate threshold
come from one sort of the threshold variable and a running (prefix) sum of
the regressor outer products, so a profile over the grid costs about as much
as a single AR fit. :func:`suplm_statistic` is the same kernel applied to a
stack of one; the bootstrap sends its replicates through it as well.

The single-threshold helpers :func:`information_blocks`, :func:`score_psi`
and :func:`lm_at_threshold` expose the individual pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .arfit import ARFit, MAX_CONDITION, design_matrix, min_length, ols_batch
from .core import TimeSeries, as_series
from .exceptions import (
    AllThresholdsSingular,
    DegenerateGrid,
    InsufficientData,
    SingularAtThreshold,
    SingularDesign,
)

DEFAULT_LOWER_Q = 0.25
DEFAULT_UPPER_Q = 0.75

#: Negative round-off in a quadratic form down to this value is clamped to 0.
NEG_CLAMP = -1e-10


@dataclass(frozen=True)
class ThresholdGrid:
    """Candidate thresholds for the delay-``delay`` threshold variable."""

    delay: int
    candidates: np.ndarray
    lower_q: float = DEFAULT_LOWER_Q
    upper_q: float = DEFAULT_UPPER_Q

    def __post_init__(self):
        c = np.array(self.candidates, dtype=np.float64).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "candidates", c)

    def __len__(self):
        return self.candidates.size


@dataclass(frozen=True)
class InfoBlocks:
    """Observed information blocks (already divided by ``sigma2``).

    ``i12_of_r`` and ``i22_of_r`` have shape ``(len(grid), p+1, p+1)``; for the
    threshold model the two coincide and are stored as the same array.
    """

    i11: np.ndarray
    i12_of_r: np.ndarray
    i22_of_r: np.ndarray
    candidates: np.ndarray

    def index_of(self, r: float) -> int:
        hits = np.flatnonzero(self.candidates == r)
        if hits.size == 0:
            raise ValueError(f"threshold {r!r} is not a grid candidate")
        return int(hits[0])


@dataclass(frozen=True)
class SupLMResult:
    statistic: float
    argmax_threshold: float
    thresholds: np.ndarray
    values: np.ndarray
    skipped: List[Tuple[float, str]] = field(default_factory=list)
    fit: Optional[ARFit] = None
    grid: Optional[ThresholdGrid] = None

    @property
    def profile(self) -> List[Tuple[float, float]]:
        return list(zip(self.thresholds.tolist(), self.values.tolist()))


# ---------------------------------------------------------------------------
# shared linear algebra


def schur_complement(i11, i12):
    """``i22 - i21 i11^{-1} i12`` for the threshold model, where ``i22 = i12``.

    Broadcasts over leading dimensions; ``i11`` must broadcast against
    ``i12``. The result is symmetrised.
    """
    w = np.linalg.solve(i11, i12)
    s = i12 - np.swapaxes(i12, -1, -2) @ w
    return 0.5 * (s + np.swapaxes(s, -1, -2))


def quadratic_forms(schur, score):
    """``score' schur^{-1} score`` via an eigen-decomposition of ``schur``.

    Returns ``(values, condition)``; entries whose condition number exceeds
    the tolerance are returned as NaN.
    """
    lam, vec = np.linalg.eigh(schur)
    lo, hi = lam[..., 0], lam[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lo > 0, hi / lo, np.inf)
        proj = np.einsum("...ji,...j->...i", vec, score)
        q = np.sum(proj**2 / lam, axis=-1)
    ok = cond <= MAX_CONDITION
    q = np.where(ok, q, np.nan)
    q = np.where(ok & (q < 0) & (q >= NEG_CLAMP), 0.0, q)
    return q, cond


# ---------------------------------------------------------------------------
# grid


def quantile_bounds(z: np.ndarray, lower_q: float, upper_q: float) -> np.ndarray:
    """Linear-interpolation ("type 7") quantiles along the last axis."""
    return np.quantile(z, [lower_q, upper_q], axis=-1)


def _check_quantiles(lower_q, upper_q):
    if not 0 < lower_q < upper_q < 1:
        raise ValueError(f"need 0 < lower_q < upper_q < 1, got ({lower_q}, {upper_q})")


def conditioning_length(p: int, d: int) -> int:
    """Observations held out at the start: enough for p lags and the delay."""
    return max(p, d)


def threshold_variable(values: np.ndarray, p: int, d: int) -> np.ndarray:
    """``X_{t-d}`` over the regression sample (t >= max(p, d))."""
    m0 = conditioning_length(p, d)
    n = values.shape[-1]
    return values[..., m0 - d : n - d]


def fit_for_test(series, p: int, d: int) -> ARFit:
    """AR(p) fit on the sample used by the test.

    When ``d > p`` the first ``d - p`` observations are dropped so that every
    regression row has a threshold variable.
    """
    from .arfit import fit_ar

    series = as_series(series)
    return fit_ar(TimeSeries(series.values[conditioning_length(p, d) - p :]), p)


def build_grid(series, p: int, d: int, lower_q: float = DEFAULT_LOWER_Q,
               upper_q: float = DEFAULT_UPPER_Q) -> ThresholdGrid:
    """Distinct observed values of ``X_{t-d}`` between two sample quantiles."""
    series = as_series(series)
    _check_quantiles(lower_q, upper_q)
    if d < 1 or d > len(series) - 1:
        raise ValueError(f"delay must be in [1, {len(series) - 1}], got {d}")
    z = threshold_variable(series.values, p, d)
    lo, hi = quantile_bounds(z, lower_q, upper_q)
    cand = np.unique(z[(z >= lo) & (z <= hi)])
    if cand.size < 2:
        raise DegenerateGrid(
            f"only {cand.size} distinct threshold candidate(s) in the "
            f"[{lower_q}, {upper_q}] quantile range"
        )
    return ThresholdGrid(d, cand, lower_q, upper_q)


# ---------------------------------------------------------------------------
# single-threshold building blocks


def _test_arrays(series: TimeSeries, fit: ARFit, d: int):
    x = series.values
    p = fit.order
    m0 = x.size - fit.n_eff
    if m0 < max(p, d):
        raise ValueError(
            f"fit conditions on {m0} observations but delay {d} needs {max(p, d)}; "
            "use fit_for_test()"
        )
    design, _ = design_matrix(x, p, start=m0)
    z = x[m0 - d : x.size - d]
    return design, z


def information_blocks(series, fit: ARFit, grid: ThresholdGrid) -> InfoBlocks:
    """Information blocks at every grid candidate in one pass over the sorted threshold variable."""
    series = as_series(series)
    design, z = _test_arrays(series, fit, grid.delay)
    order = np.argsort(z, kind="stable")
    xs = design[order]
    run = np.cumsum(xs[:, :, None] * xs[:, None, :], axis=0) / fit.sigma2
    i11 = run[-1]
    pos = np.searchsorted(z[order], grid.candidates, side="right") - 1
    k = design.shape[1]
    blocks = np.where((pos >= 0)[:, None, None], run[np.maximum(pos, 0)], np.zeros((k, k)))
    return InfoBlocks(i11, blocks, blocks, grid.candidates)


def score_psi(series, fit: ARFit, r: float, d: int) -> np.ndarray:
    """Score for the regime-shift parameters at the restricted estimate."""
    series = as_series(series)
    design, z = _test_arrays(series, fit, d)
    gate = (z <= r).astype(np.float64)
    return design.T @ (fit.residuals * gate) / fit.sigma2


def lm_at_threshold(score, blocks: InfoBlocks, r: float) -> float:
    """LM statistic at a single threshold ``r`` (which must be a grid candidate)."""
    j = blocks.index_of(r)
    schur = schur_complement(blocks.i11, blocks.i12_of_r[j])
    value, cond = quadratic_forms(schur, np.asarray(score, dtype=np.float64))
    if np.isnan(value):
        raise SingularAtThreshold(
            f"Schur complement at r={r!r} has condition number {float(cond):.3g}",
            threshold=r, condition=float(cond),
        )
    return float(value)


# ---------------------------------------------------------------------------
# batched kernel


@dataclass
class BatchResult:
    """Outcome of :func:`suplm_batch` for a stack of ``m`` series.

    ``error[i]`` is ``None`` or the exception class that row ``i`` hit, with
    a message in ``message[i]``. The per-candidate arrays (``rows``,
    ``thresholds``, ``values``) are flattened across the stack, row-major.
    """

    statistic: np.ndarray
    argmax: np.ndarray
    error: list
    message: list
    coeffs: np.ndarray
    residuals: np.ndarray
    sigma2: np.ndarray
    rows: np.ndarray
    thresholds: np.ndarray
    values: np.ndarray
    conditions: np.ndarray


def suplm_batch(values: np.ndarray, p: int, d: int, lower_q: float = DEFAULT_LOWER_Q,
                upper_q: float = DEFAULT_UPPER_Q, grid=None) -> BatchResult:
    """supLM statistic for each row of ``values`` (shape ``(m, n)``).

    ``grid`` optionally fixes the candidate thresholds for every row instead
    of rebuilding them from each row's own quantiles.
    """
    x = np.atleast_2d(np.asarray(values, dtype=np.float64))
    m, n = x.shape
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if d < 1 or d > n - 1:
        raise ValueError(f"delay must be in [1, {n - 1}], got {d}")
    _check_quantiles(lower_q, upper_q)
    m0 = conditioning_length(p, d)
    if n - (m0 - p) < min_length(p):
        raise InsufficientData(
            f"AR({p}) with delay {d} needs at least {min_length(p) + m0 - p} observations, got {n}"
        )
    k = p + 1
    error: list = [None] * m
    message: list = [""] * m

    design, y = design_matrix(x, p, start=m0)
    z = x[:, m0 - d : n - d]
    N = y.shape[1]
    coeffs, resid, cond = ols_batch(design, y)
    sigma2 = np.einsum("mn,mn->m", resid, resid) / (N - k)
    for i in np.flatnonzero(~(cond <= MAX_CONDITION)):
        error[i] = SingularDesign
        message[i] = f"AR({p}) design is singular (condition number of X'X = {cond[i]:.3g})"

    # LM is invariant to a change of regressor basis; the standardised one
    # keeps the conditioning check independent of the data's location and scale
    loc = x.mean(axis=1)
    spread = x.std(axis=1)
    spread = np.where(spread > 0, spread, 1.0)
    basis = design.copy()
    basis[:, :, 1:] = (design[:, :, 1:] - loc[:, None, None]) / spread[:, None, None]

    order = np.argsort(z, axis=1, kind="stable")
    zs = np.take_along_axis(z, order, axis=1)
    xs = np.take_along_axis(basis, order[:, :, None], axis=1)
    es = np.take_along_axis(resid, order, axis=1)

    if grid is None:
        lo, hi = quantile_bounds(z, lower_q, upper_q)
        last_of_tie = np.ones_like(zs, dtype=bool)
        last_of_tie[:, :-1] = zs[:, 1:] != zs[:, :-1]
        mask = last_of_tie & (zs >= lo[:, None]) & (zs <= hi[:, None])
        for i in np.flatnonzero(mask.sum(axis=1) < 2):
            if error[i] is None:
                error[i] = DegenerateGrid
                message[i] = (
                    f"only {int(mask[i].sum())} distinct threshold candidate(s) in the "
                    f"[{lower_q}, {upper_q}] quantile range"
                )
        rows, pos = np.nonzero(mask)
        thr = zs[rows, pos]
    else:
        cand = np.asarray(getattr(grid, "candidates", grid), dtype=np.float64)
        rows = np.repeat(np.arange(m), cand.size)
        thr = np.tile(cand, m)
        pos = np.concatenate([np.searchsorted(zs[i], cand, side="right") - 1 for i in range(m)])

    bad = np.array([e is not None for e in error], dtype=bool)
    keep = ~bad[rows]
    rows, pos, thr = rows[keep], pos[keep], thr[keep]

    scale = 1.0 / sigma2
    outer = xs[:, :, :, None] * xs[:, :, None, :]
    run = np.cumsum(outer, axis=1)
    grad = np.cumsum(xs * es[:, :, None], axis=1)
    i11 = run[:, -1] * scale[:, None, None]
    safe = np.maximum(pos, 0)
    empty = (pos < 0)[:, None]
    i12 = np.where(empty[:, :, None], 0.0, run[rows, safe] * scale[rows, None, None])
    score = np.where(empty, 0.0, grad[rows, safe] * scale[rows, None])

    if rows.size:
        i11_ok = np.where(bad[:, None, None], np.eye(k), i11)
        schur = schur_complement(i11_ok[rows], i12)
        vals, conds = quadratic_forms(schur, score)
    else:
        vals = np.empty(0)
        conds = np.empty(0)

    stat = np.full(m, np.nan)
    argmax = np.full(m, np.nan)
    valid = ~np.isnan(vals)
    if np.any(valid):
        vrows = rows[valid]
        vvals = vals[valid]
        best = np.full(m, -np.inf)
        np.maximum.at(best, vrows, vvals)
        hit = vvals == best[vrows]
        first_rows, first_idx = np.unique(vrows[hit], return_index=True)
        stat[first_rows] = best[first_rows]
        argmax[first_rows] = thr[valid][hit][first_idx]
    for i in range(m):
        if error[i] is None and np.isnan(stat[i]):
            error[i] = AllThresholdsSingular
            message[i] = "the Schur complement is singular at every grid candidate"

    return BatchResult(stat, argmax, error, message, coeffs, resid, sigma2,
                       rows, thr, vals, conds)


def suplm_statistic(series, p: int, d: int, lower_q: float = DEFAULT_LOWER_Q,
                    upper_q: float = DEFAULT_UPPER_Q, grid=None) -> SupLMResult:
    """supLM test statistic for a threshold effect at delay ``d`` in an AR(p)."""
    series = as_series(series)
    res = suplm_batch(series.values[None, :], p, d, lower_q, upper_q, grid=grid)
    if res.error[0] is not None:
        raise res.error[0](res.message[0])
    m0 = conditioning_length(p, d)
    resid = res.residuals[0]
    fit = ARFit(
        order=p,
        coeffs=res.coeffs[0],
        residuals=resid,
        sigma2=float(res.sigma2[0]),
        n_eff=resid.size,
        initial_values=series.values[m0 - p : m0].copy(),
    )
    ok = ~np.isnan(res.values)
    skipped = [
        (float(r), f"Schur complement condition number {c:.3g} exceeds {MAX_CONDITION:.0e}")
        for r, c in zip(res.thresholds[~ok], res.conditions[~ok])
    ]
    used = ThresholdGrid(d, res.thresholds, lower_q, upper_q)
    return SupLMResult(
        statistic=float(res.statistic[0]),
        argmax_threshold=float(res.argmax[0]),
        thresholds=res.thresholds[ok],
        values=res.values[ok],
        skipped=skipped,
        fit=fit,
        grid=used,
    )
