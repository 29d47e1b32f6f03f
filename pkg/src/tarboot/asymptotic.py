"""Asymptotic critical values by simulating the limiting sup-chi-square functional.

Under the null the LM profile converges to ``xi(r)' S(r, r)^{-1} xi(r)`` for a
centred Gaussian process ``xi`` whose covariance kernel is built from the
information blocks. The kernel is estimated by plug-in sample moments on the
test's own threshold grid, the process is drawn jointly over the grid, and
the supremum's empirical quantiles are the critical values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from .arfit import MAX_CONDITION, ARFit
from .core import RngSeed, as_series
from .exceptions import SingularAtThreshold
from .report import TestReport
from .suplm import (
    DEFAULT_LOWER_Q,
    DEFAULT_UPPER_Q,
    ThresholdGrid,
    _test_arrays,
    information_blocks,
    schur_complement,
    suplm_statistic,
)

DEFAULT_LEVELS = (0.90, 0.95, 0.99)
#: Grids larger than this are thinned by even-rank subsampling.
MAX_POINTS = 200
#: Draws generated per random stream.
DRAW_CHUNK = 4096


@dataclass(frozen=True)
class LimitSimConfig:
    n_sim: int = 10_000
    levels: Sequence[float] = DEFAULT_LEVELS
    seed: RngSeed = RngSeed()
    max_points: int = MAX_POINTS

    def __post_init__(self):
        levels = tuple(float(v) for v in np.atleast_1d(self.levels))
        if not all(0 < v < 1 for v in levels):
            raise ValueError(f"levels must lie in (0, 1), got {levels}")
        if self.n_sim < 1:
            raise ValueError("n_sim must be positive")
        object.__setattr__(self, "levels", levels)


def thin_grid(candidates: np.ndarray, max_points: int) -> np.ndarray:
    """Evenly spaced ranks of a sorted grid, always keeping both ends."""
    g = candidates.size
    if g <= max_points:
        return candidates
    idx = np.unique(np.round(np.linspace(0, g - 1, max_points)).astype(int))
    return candidates[idx]


def standard_basis(series, p: int) -> np.ndarray:
    """Map regressor rows ``(1, x, ...)`` to ``(1, (x - mean)/sd, ...)``, scaled by ``sd``.

    Information blocks are divided by ``sigma2``, so ``M' I M`` with this
    ``M`` is what the standardised series would give. The limit law is
    invariant to the change of basis; fixing the basis makes the simulated
    draws invariant to affine rescaling of the data as well.
    """
    x = as_series(series).values
    loc, scale = x.mean(), x.std()
    if not scale > 0:
        raise SingularAtThreshold("constant series has no kernel")
    m = np.eye(p + 1)
    m[0, 0] = scale
    m[0, 1:] = -loc
    return m


def _kept_points(i11, cs, n):
    diag = schur_complement(i11, cs) / n
    lam = np.linalg.eigvalsh(diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lam[:, 0] > 0, lam[:, -1] / lam[:, 0], np.inf)
    keep = cond <= MAX_CONDITION
    if not np.any(keep):
        raise SingularAtThreshold("the kernel is singular at every grid point")
    return keep


def kernel_blocks(series, fit: ARFit, grid: ThresholdGrid, max_points: int = MAX_POINTS):
    """Plug-in covariance kernel of the limiting score process over the grid.

    Returns ``(thresholds, K)`` with ``K`` of shape ``(G, G, k, k)`` such that
    ``K[i, j]`` estimates the kernel at ``(r_i, r_j)``, expressed in the
    basis of :func:`standard_basis`. Duplicate candidates are collapsed and
    points where the diagonal block is singular dropped.
    """
    series = as_series(series)
    cand = thin_grid(np.unique(grid.candidates), max_points)
    blocks = information_blocks(series, fit, ThresholdGrid(grid.delay, cand))
    basis = standard_basis(series, fit.order)
    i11 = basis.T @ blocks.i11 @ basis
    cs = basis.T @ blocks.i22_of_r @ basis
    n = fit.n_eff
    keep = _kept_points(i11, cs, n)
    cand, cs = cand[keep], cs[keep]
    w = np.linalg.solve(i11, cs)
    cross = np.einsum("iab,jbc->ijac", cs, w)
    g = cand.size
    lo = np.minimum.outer(np.arange(g), np.arange(g))
    kern = (cs[lo] - cross) / n
    return cand, kern


def score_factor(series, fit: ARFit, grid: ThresholdGrid, max_points: int = MAX_POINTS):
    """Exact factor of the plug-in kernel.

    Returns ``(thresholds, A)`` with ``A`` of shape ``(G, n_eff, k)`` and
    ``K[i, j] = A[i].T @ A[j] / n_eff``. Row ``t`` of ``A[i]`` is the
    residualised regressor ``u_t 1(z_t <= r_i) - (i11^{-1} C_i)' u_t``, where
    ``u_t`` is the standardised regressor row divided by ``sigma``.
    """
    series = as_series(series)
    cand = thin_grid(np.unique(grid.candidates), max_points)
    design, z = _test_arrays(series, fit, grid.delay)
    u = design @ standard_basis(series, fit.order) / np.sqrt(fit.sigma2)
    gate = (z[None, :] <= cand[:, None]).astype(np.float64)
    i11 = u.T @ u
    cs = np.einsum("gn,nk,nl->gkl", gate, u, u)
    n = fit.n_eff
    keep = _kept_points(i11, cs, n)
    cand, cs, gate = cand[keep], cs[keep], gate[keep]
    w = np.linalg.solve(i11, cs)
    a = gate[:, :, None] * u[None] - np.einsum("nk,gkl->gnl", u, w)
    return cand, a


def simulate_sup(series, fit: ARFit, grid: ThresholdGrid, cfg: LimitSimConfig) -> np.ndarray:
    """``cfg.n_sim`` sorted draws of the sup over the grid of the limiting quadratic form.

    The Gaussian process is drawn as ``A z / sqrt(n)`` with ``z`` standard
    normal in ``R^n_eff`` (see :func:`score_factor`), so no square root of
    the joint kernel is needed.
    """
    series = as_series(series)
    cand, a = score_factor(series, fit, grid, cfg.max_points)
    g, n, k = a.shape
    # whiten each grid point so the quadratic form is a sum of squares
    white = np.empty_like(a)
    for i in range(g):
        c, _ = cho_factor(a[i].T @ a[i] / n, lower=True)
        white[i] = solve_triangular(np.tril(c), a[i].T, lower=True).T
    flat = white.transpose(1, 0, 2).reshape(n, g * k) / np.sqrt(n)
    sups = np.empty(cfg.n_sim)
    for c, start in enumerate(range(0, cfg.n_sim, DRAW_CHUNK)):
        m = min(DRAW_CHUNK, cfg.n_sim - start)
        zz = cfg.seed.stream(c).generator().standard_normal((n, m))
        w = (flat.T @ zz).reshape(g, k, m)
        sups[start : start + m] = np.max(np.sum(w * w, axis=1), axis=0)
    return np.sort(sups)


def asymptotic_critical_values(series, fit: ARFit, grid: ThresholdGrid,
                               cfg: LimitSimConfig) -> np.ndarray:
    """Simulated critical values, one per level in ``cfg.levels``."""
    sups = simulate_sup(series, fit, grid, cfg)
    return np.quantile(sups, cfg.levels)


# ---------------------------------------------------------------------------
# optional external table (e.g. transcribed from published tables)


def load_critical_table(path) -> list:
    """Read a CSV with header ``dim,pi_lower,pi_upper,level,value``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["dim", "pi_lower", "pi_upper", "level", "value"]
        if reader.fieldnames != expected:
            raise ValueError(f"critical-value table header must be {','.join(expected)}")
        rows = []
        for row in reader:
            rows.append({
                "dim": int(row["dim"]),
                "pi_lower": float(row["pi_lower"]),
                "pi_upper": float(row["pi_upper"]),
                "level": float(row["level"]),
                "value": float(row["value"]),
            })
    return rows


def lookup_critical_value(table: list, dim: int, pi_lower: float, pi_upper: float,
                          level: float, tol: float = 1e-9) -> float:
    for row in table:
        if (row["dim"] == dim and abs(row["pi_lower"] - pi_lower) <= tol
                and abs(row["pi_upper"] - pi_upper) <= tol and abs(row["level"] - level) <= tol):
            return row["value"]
    raise KeyError(f"no table entry for dim={dim}, pi=({pi_lower}, {pi_upper}), level={level}")


def asymptotic_test(series, p: int, d: int, lower_q: float = DEFAULT_LOWER_Q,
                    upper_q: float = DEFAULT_UPPER_Q, cfg: LimitSimConfig = LimitSimConfig(),
                    alpha: float = 0.05, table: Optional[list] = None) -> TestReport:
    """supLM test against simulated asymptotic critical values.

    Rejects when the statistic exceeds the ``1 - alpha`` critical value. With
    ``table`` the decision uses the tabulated value instead, while the
    simulated p-value is still reported.
    """
    series = as_series(series)
    obs = suplm_statistic(series, p, d, lower_q, upper_q)
    grid = ThresholdGrid(d, obs.thresholds, lower_q, upper_q)
    sups = simulate_sup(series, obs.fit, grid, cfg)
    levels = sorted(set(cfg.levels) | {1 - alpha})
    cvs = dict(zip(levels, np.quantile(sups, levels).tolist()))
    source = "simulated"
    if table is not None:
        cvs[1 - alpha] = lookup_critical_value(table, p + 1, lower_q, upper_q, 1 - alpha)
        source = "table"
    p_value = float(np.count_nonzero(sups >= obs.statistic) / sups.size)
    return TestReport(
        mode="asymptotic",
        statistic=obs.statistic,
        argmax_threshold=obs.argmax_threshold,
        p=p,
        d=d,
        p_value=p_value,
        alpha=alpha,
        reject=bool(obs.statistic > cvs[1 - alpha]),
        critical_values=cvs,
        seed=cfg.seed,
        grid_size=len(obs.grid),
        skipped=obs.skipped,
        critical_source=source,
    )
