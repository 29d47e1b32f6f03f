"""Least-squares (conditional Gaussian MLE) fitting of AR(p) models and AIC order selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_series
from .exceptions import InsufficientData, SingularDesign

#: Largest tolerated condition number of the regression cross-product matrix.
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class ARFit:
    """Restricted (linear AR) fit.

    Attributes
    ----------
    order : int
    coeffs : ndarray, shape (order + 1,)
        Intercept followed by the lag coefficients.
    residuals : ndarray, shape (n_eff,)
    sigma2 : float
        ``sum(residuals**2) / (n_eff - order - 1)``.
    n_eff : int
        Number of regression rows, ``len(series) - order``.
    initial_values : ndarray, shape (order,)
        The observations the fit conditions on.
    """

    order: int
    coeffs: np.ndarray
    residuals: np.ndarray
    sigma2: float
    n_eff: int
    initial_values: np.ndarray

    @property
    def intercept(self) -> float:
        return float(self.coeffs[0])

    @property
    def rss(self) -> float:
        return float(np.dot(self.residuals, self.residuals))


def min_length(p: int) -> int:
    return p + max(p + 2, 10)


def design_matrix(values: np.ndarray, p: int, start: int | None = None):
    """Regressors ``(1, X_{t-1}, ..., X_{t-p})`` and responses ``X_t`` for ``t >= start``.

    Works on a single series (1-d) or a stack of equal length series (2-d,
    one series per row). ``start`` defaults to ``p``.
    """
    values = np.asarray(values, dtype=np.float64)
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be >= p")
    n = values.shape[-1]
    cols = [np.ones(values.shape[:-1] + (n - start,))]
    for i in range(1, p + 1):
        cols.append(values[..., start - i : n - i])
    return np.stack(cols, axis=-1), values[..., start:]


def ols_batch(design: np.ndarray, y: np.ndarray):
    """QR least squares on a stack of regressions.

    The first column must be the intercept. The other columns are centred
    before the QR step, so a large level relative to the spread does not
    cost accuracy. ``condition`` is the condition number of ``Z.T @ Z`` where
    ``Z`` is the centred design with unit-norm columns; it is invariant to
    affine rescaling of the data and infinite for a constant regressor.
    """
    mean = design[..., 1:].mean(axis=-2, keepdims=True)
    centred = design.copy()
    centred[..., 1:] -= mean
    norms = np.sqrt(np.sum(centred**2, axis=-2, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(norms > 0, centred / norms, 0.0)
    sv = np.linalg.svd(unit, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.where(sv[..., -1] > 0, (sv[..., 0] / sv[..., -1]) ** 2, np.inf)
    q, r = np.linalg.qr(centred)
    qty = np.einsum("...nk,...n->...k", q, y)
    ok = condition <= MAX_CONDITION
    coeffs = np.zeros(qty.shape)
    if np.any(ok):
        coeffs[ok] = np.linalg.solve(r[ok], qty[ok][..., None])[..., 0]
    resid = y - np.einsum("...nk,...k->...n", centred, coeffs)
    coeffs[..., 0] -= np.einsum("...k,...k->...", mean[..., 0, :], coeffs[..., 1:])
    return coeffs, resid, condition


def fit_ar(series, p: int) -> ARFit:
    """Fit an AR(p) with intercept by least squares, conditioning on the first p values."""
    series = as_series(series)
    x = series.values
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    if x.size < min_length(p):
        raise InsufficientData(
            f"AR({p}) fit needs at least {min_length(p)} observations, got {x.size}"
        )
    design, y = design_matrix(x, p)
    coeffs, resid, cond = ols_batch(design[None], y[None])
    if not cond[0] <= MAX_CONDITION:
        raise SingularDesign(
            f"AR({p}) design is singular (condition number of X'X = {cond[0]:.3g})"
        )
    n_eff = y.size
    resid = resid[0]
    return ARFit(
        order=p,
        coeffs=coeffs[0],
        residuals=resid,
        sigma2=float(np.dot(resid, resid) / (n_eff - p - 1)),
        n_eff=n_eff,
        initial_values=x[:p].copy(),
    )


def aic_table(series, p_max: int) -> np.ndarray:
    """AIC for p = 1..p_max on the common sample ``t = p_max+1, ..., n``."""
    series = as_series(series)
    x = series.values
    if p_max < 1:
        raise ValueError(f"p_max must be >= 1, got {p_max}")
    if x.size < min_length(p_max):
        raise InsufficientData(
            f"order selection up to {p_max} needs at least {min_length(p_max)} observations"
        )
    n_c = x.size - p_max
    aic = np.empty(p_max)
    for p in range(1, p_max + 1):
        design, y = design_matrix(x, p, start=p_max)
        _, resid, cond = ols_batch(design[None], y[None])
        if not cond[0] <= MAX_CONDITION:
            raise SingularDesign(f"AR({p}) design is singular")
        rss = float(np.dot(resid[0], resid[0]))
        aic[p - 1] = n_c * np.log(rss / n_c) + 2 * (p + 1)
    return aic


def select_order_aic(series, p_max: int) -> int:
    """Order in 1..p_max minimising AIC; ties go to the smaller order."""
    return int(np.argmin(aic_table(series, p_max))) + 1
