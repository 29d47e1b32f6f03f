import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from tarboot.arfit import aic_table, design_matrix, fit_ar, min_length, select_order_aic
from tarboot.core import ARParams, RngSeed, TimeSeries, simulate_ar
from tarboot.exceptions import InsufficientData, SingularDesign

# Fixed 12-point fixture and its AR(1) normal-equation solution, computed once
# with mpmath at 50 significant digits (fractions of the exact sums).
FIXTURE_12 = np.array([1.2, -0.7, 0.4, 2.1, 1.5, -0.3, 0.8, 1.9, -1.1, 0.2, 0.9, 1.4])
ORACLE_INTERCEPT = 0.73956653225806451613
ORACLE_PHI1 = -0.15003360215053763441
ORACLE_SIGMA2 = 1.2048525238948626045


def test_fixture_matches_oracle():
    fit = fit_ar(FIXTURE_12, 1)
    assert_allclose(fit.coeffs, [ORACLE_INTERCEPT, ORACLE_PHI1], rtol=1e-10)
    assert_allclose(fit.sigma2, ORACLE_SIGMA2, rtol=1e-10)
    assert fit.n_eff == 11
    assert_allclose(fit.initial_values, [1.2])


def test_constant_series_is_singular():
    with pytest.raises(SingularDesign):
        fit_ar(np.full(50, 3.0), 1)


def test_too_short():
    with pytest.raises(InsufficientData):
        fit_ar(np.arange(min_length(2) - 1, dtype=float), 2)


def test_design_matrix_layout():
    x = np.arange(6.0)
    design, y = design_matrix(x, 2)
    assert_allclose(design, [[1, 1, 0], [1, 2, 1], [1, 3, 2], [1, 4, 3]])
    assert_allclose(y, [2, 3, 4, 5])
    design3, y3 = design_matrix(x, 2, start=3)
    assert_allclose(design3, design[1:])
    stacked, ys = design_matrix(np.vstack([x, 2 * x]), 2)
    assert_allclose(stacked[1], 2 * design - np.c_[np.ones(4), 0 * design[:, 1:]])
    assert_allclose(ys[1], 2 * y)


def test_consistency_long_ar1():
    x = simulate_ar(ARParams(1.0, (0.5,)), 100_000, rng=RngSeed(31))
    fit = fit_ar(x, 1)
    assert abs(fit.coeffs[1] - 0.5) < 0.01
    assert abs(fit.sigma2 - 1.0) < 0.02


def test_near_noiseless_reproduction():
    # started from rest so the deterministic transient, not the noise, identifies the fit
    params = ARParams(0.4, (0.5, -0.3), noise_sd=1e-8)
    x = simulate_ar(params, 40, burn_in=0, rng=RngSeed(32))
    fit = fit_ar(x, 2)
    assert_allclose(fit.coeffs, [0.4, 0.5, -0.3], atol=1e-4)


def test_order_zero_is_sample_mean():
    x = simulate_ar(ARParams(2.0, ()), 200, rng=RngSeed(33)).values
    fit = fit_ar(x, 0)
    assert_allclose(fit.coeffs, [x.mean()])
    assert_allclose(fit.sigma2, x.var(ddof=1))


finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(20, 80), elements=finite), st.integers(0, 3))
def test_residuals_orthogonal_to_regressors(x, p):
    try:
        fit = fit_ar(x, p)
    except SingularDesign:
        return
    design, y = design_matrix(x, p)
    scale = np.abs(design).max() * np.abs(y).max() * y.size
    assert np.all(np.abs(design.T @ fit.residuals) <= 1e-9 * scale)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-50, 50), st.integers(1, 3))
def test_affine_equivariance(seed, a, b, p):
    x = simulate_ar(ARParams(0.0, (0.3,) + (0.0,) * (p - 1)), 80, rng=RngSeed(seed))
    f0 = fit_ar(x, p)
    f1 = fit_ar(x.affine(a, b), p)
    slope_sum = 1 - f0.coeffs[1:].sum()
    assert_allclose(f1.coeffs[1:], f0.coeffs[1:], rtol=1e-7, atol=1e-9)
    assert_allclose(f1.coeffs[0], a * f0.coeffs[0] + b * slope_sum, rtol=1e-7, atol=1e-7 * (1 + abs(b)))
    assert_allclose(f1.sigma2, a**2 * f0.sigma2, rtol=1e-7)
    assert_allclose(f1.residuals, a * f0.residuals, rtol=1e-6, atol=1e-8 * a)


def test_aic_common_sample():
    x = simulate_ar(ARParams(0.0, (0.5,)), 120, rng=RngSeed(34)).values
    aic = aic_table(x, 3)
    n_c = 117
    for p in (1, 2, 3):
        design, y = design_matrix(x, p, start=3)
        rss = np.sum((y - design @ np.linalg.lstsq(design, y, rcond=None)[0]) ** 2)
        assert_allclose(aic[p - 1], n_c * np.log(rss / n_c) + 2 * (p + 1))


def test_aic_pmax_one():
    for s in range(5):
        x = simulate_ar(ARParams(0.0, (0.4, 0.3)), 60, rng=RngSeed(s))
        assert select_order_aic(x, 1) == 1


def test_aic_white_noise_prefers_one():
    picks = [select_order_aic(simulate_ar(ARParams(0.0, ()), 200, rng=RngSeed(1000 + s)), 5)
             for s in range(200)]
    assert np.mean(np.array(picks) == 1) > 0.5


def test_aic_ar2_mode_is_two():
    params = ARParams(0.0, (-0.35, -0.45))
    picks = [select_order_aic(simulate_ar(params, 200, rng=RngSeed(2000 + s)), 5)
             for s in range(200)]
    assert np.bincount(picks).argmax() == 2


def test_aic_rejects_bad_pmax():
    with pytest.raises(ValueError):
        aic_table(TimeSeries(np.arange(30.0)), 0)
