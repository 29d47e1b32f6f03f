import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from tarboot.core import (
    ARParams,
    RngSeed,
    TARParams,
    TimeSeries,
    simulate_ar,
    simulate_tar,
    stationary_variance,
)


def test_timeseries_rejects_nonfinite():
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.nan])
    with pytest.raises(ValueError):
        TimeSeries([])
    ts = TimeSeries([1, 2, 3], label="x")
    assert len(ts) == 3
    assert not ts.values.flags.writeable


def test_params_validation():
    with pytest.raises(ValueError):
        ARParams(0.0, (0.5,), noise_sd=0.0)
    with pytest.raises(ValueError):
        TARParams(ARParams(0.0, (0.5,)), 0.1, (0.1, 0.2))
    with pytest.raises(ValueError):
        TARParams(ARParams(0.0, (0.5,)), delay=0)


def test_rng_streams():
    a = RngSeed(1, 0).generator().standard_normal(5)
    b = RngSeed(1, 0).generator().standard_normal(5)
    c = RngSeed(1, 1).generator().standard_normal(5)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngSeed(3).derive(1, 2) == RngSeed(3).derive(1, 2)
    assert RngSeed(3).derive(1, 2) != RngSeed(3).derive(2, 1)
    with pytest.raises(ValueError):
        RngSeed(-1)
    with pytest.raises(ValueError):
        RngSeed(2**64)


def test_white_noise():
    x = simulate_ar(ARParams(0.0, ()), 3, rng=RngSeed(5))
    assert len(x) == 3
    big = simulate_ar(ARParams(0.0, ()), 100_000, rng=RngSeed(5)).values
    assert abs(big.mean()) < 0.02
    assert abs(big.var() - 1.0) < 0.03


def test_white_noise_is_scaled_standard_normal():
    x = simulate_ar(ARParams(0.0, (), noise_sd=2.0), 10, burn_in=0, rng=RngSeed(8))
    e = RngSeed(8).generator().standard_normal(10)
    assert_array_equal(x.values, 2.0 * e)


def test_ar1_autocorrelation():
    x = simulate_ar(ARParams(0.0, (0.9,)), 100_000, burn_in=500, rng=RngSeed(11)).values
    xc = x - x.mean()
    rho1 = np.dot(xc[1:], xc[:-1]) / np.dot(xc, xc)
    assert abs(rho1 - 0.9) < 0.02


def test_ar1_stationary_variance_within_three_se():
    phi, n = 0.5, 200_000
    x = simulate_ar(ARParams(0.0, (phi,)), n, rng=RngSeed(12)).values
    target = stationary_variance(phi)
    # Var of the sample variance of a Gaussian AR(1): 2 sigma_x^4 (1 + phi^2) / (1 - phi^2) / n
    se = np.sqrt(2 * target**2 * (1 + phi**2) / (1 - phi**2) / n)
    assert abs(x.var() - target) < 3 * se


def test_determinism():
    params = ARParams(0.3, (0.4, -0.2), 1.5)
    a = simulate_ar(params, 200, 50, RngSeed(42, 3))
    b = simulate_ar(params, 200, 50, RngSeed(42, 3))
    assert_array_equal(a.values, b.values)


def test_burn_in_discards_prefix():
    params = ARParams(0.1, (0.6,))
    long = simulate_ar(params, 30, burn_in=0, rng=RngSeed(9)).values
    # same innovations, burn_in shifts where recording starts only when draws line up
    eps = RngSeed(9).generator().standard_normal(30)
    manual = np.zeros(31)
    for t in range(30):
        manual[t + 1] = 0.1 + 0.6 * manual[t] + eps[t]
    assert_allclose(long, manual[1:], rtol=0, atol=1e-14)


@pytest.mark.parametrize("coeffs", [(), (0.5,), (0.4, -0.3), (0.2, 0.1, -0.1)])
def test_tar_with_zero_shift_is_ar_bitwise(coeffs):
    base = ARParams(0.7, coeffs, 1.3)
    tar = TARParams(base, 0.0, (0.0,) * len(coeffs), threshold=0.2, delay=2)
    assert_array_equal(
        simulate_tar(tar, 300, 100, RngSeed(4)).values,
        simulate_ar(base, 300, 100, RngSeed(4)).values,
    )


def test_tar_with_infinite_threshold_merges_regimes():
    base = ARParams(-0.1, (-0.8,))
    tar = TARParams.uniform_shift(base, 0.9, threshold=np.inf)
    merged = ARParams(0.8, (0.1,))
    assert_allclose(
        simulate_tar(tar, 500, 100, RngSeed(6)).values,
        simulate_ar(merged, 500, 100, RngSeed(6)).values,
        rtol=1e-12, atol=1e-12,
    )


def test_tar_m1_regimes_recovered():
    base = ARParams(-0.1, (-0.8,))
    tar = TARParams.uniform_shift(base, 0.9, threshold=0.0, delay=1)
    x = simulate_tar(tar, 100_000, rng=RngSeed(21)).values
    lag, cur = x[:-1], x[1:]
    low = lag <= 0
    assert 0 < low.mean() < 1
    for sel, (c0, c1) in [(low, (0.8, 0.1)), (~low, (-0.1, -0.8))]:
        design = np.column_stack([np.ones(sel.sum()), lag[sel]])
        coef = np.linalg.lstsq(design, cur[sel], rcond=None)[0]
        assert_allclose(coef, [c0, c1], atol=0.05)
