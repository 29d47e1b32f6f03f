import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from tarboot.arfit import fit_ar
from tarboot.asymptotic import (
    LimitSimConfig,
    asymptotic_critical_values,
    asymptotic_test,
    kernel_blocks,
    score_factor,
    load_critical_table,
    lookup_critical_value,
    simulate_sup,
    standard_basis,
    thin_grid,
)
from tarboot.core import ARParams, RngSeed, simulate_ar
from tarboot.montecarlo import ExperimentDesign, run_size_experiment
from tarboot.suplm import (
    ThresholdGrid,
    build_grid,
    fit_for_test,
    information_blocks,
    schur_complement,
)


@pytest.fixture(scope="module")
def ar1():
    x = simulate_ar(ARParams(0.0, (0.4,)), 120, rng=RngSeed(201))
    return x, fit_ar(x, 1)


def test_levels_increasing(ar1):
    x, fit = ar1
    grid = build_grid(x, 1, 1)
    cv = asymptotic_critical_values(x, fit, grid, LimitSimConfig(4000, (0.5, 0.9, 0.95), RngSeed(1)))
    assert np.all(np.diff(cv) > 0)


def test_single_point_chi2():
    x = simulate_ar(ARParams(0.0, ()), 200, rng=RngSeed(202))
    fit = fit_for_test(x, 0, 1)
    grid = ThresholdGrid(1, [np.median(x.values[:-1])])
    cv = asymptotic_critical_values(x, fit, grid, LimitSimConfig(100_000, (0.95,), RngSeed(2)))
    target = stats.chi2.ppf(0.95, 1)
    assert abs(cv[0] - target) / target < 0.05


def test_duplicate_points_collapse(ar1):
    x, fit = ar1
    r = float(np.median(x.values))
    cfg = LimitSimConfig(5000, (0.95,), RngSeed(3))
    one = simulate_sup(x, fit, ThresholdGrid(1, [r]), cfg)
    two = simulate_sup(x, fit, ThresholdGrid(1, [r, r]), cfg)
    assert_array_equal(one, two)


def test_kernel_diagonal_is_schur_over_n(ar1):
    x, fit = ar1
    grid = build_grid(x, 1, 1)
    cand, kern = kernel_blocks(x, fit, grid)
    blocks = information_blocks(x, fit, ThresholdGrid(1, cand))
    m = standard_basis(x, 1)
    ref = m.T @ schur_complement(blocks.i11, blocks.i22_of_r) @ m / fit.n_eff
    diag = kern[np.arange(cand.size), np.arange(cand.size)]
    assert_allclose(diag, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())
    # symmetric in (r_i, r_j) with transposed blocks
    assert_allclose(kern, kern.transpose(1, 0, 3, 2), rtol=1e-12, atol=1e-14)


def test_thin_grid_keeps_ends():
    c = np.arange(1000.0)
    t = thin_grid(c, 200)
    assert t.size == 200
    assert t[0] == 0 and t[-1] == 999
    assert np.all(np.diff(t) > 0)
    assert_array_equal(thin_grid(c[:50], 200), c[:50])


def test_affine_invariance_of_critical_values(ar1):
    x, _ = ar1
    cfg = LimitSimConfig(5000, (0.9, 0.95), RngSeed(4))
    a = asymptotic_test(x, 1, 1, cfg=cfg)
    b = asymptotic_test(x.affine(3.0, -7.0), 1, 1, cfg=cfg)
    for level in (0.9, 0.95):
        assert_allclose(b.critical_values[level], a.critical_values[level], rtol=1e-6)


def test_p_value_above_half_below_median():
    x = simulate_ar(ARParams(0.0, (0.2,)), 150, rng=RngSeed(205))
    cfg = LimitSimConfig(5000, (0.5,), RngSeed(5))
    rep = asymptotic_test(x, 1, 1, cfg=cfg)
    assert rep.statistic < rep.critical_values[0.5]
    assert rep.p_value > 0.5


def test_report_fields(ar1):
    x, _ = ar1
    rep = asymptotic_test(x, 1, 1, cfg=LimitSimConfig(2000, (0.9,), RngSeed(6)), alpha=0.05)
    assert set(rep.critical_values) == {0.9, 0.95}
    assert rep.reject == (rep.statistic > rep.critical_values[0.95])
    d = rep.to_dict()
    assert d["mode"] == "asymptotic" and d["critical_source"] == "simulated"


def test_critical_table(tmp_path, ar1):
    x, _ = ar1
    path = tmp_path / "cv.csv"
    path.write_text("dim,pi_lower,pi_upper,level,value\n2,0.25,0.75,0.95,1000.0\n")
    table = load_critical_table(path)
    assert lookup_critical_value(table, 2, 0.25, 0.75, 0.95) == 1000.0
    with pytest.raises(KeyError):
        lookup_critical_value(table, 3, 0.25, 0.75, 0.95)
    rep = asymptotic_test(x, 1, 1, cfg=LimitSimConfig(1000, (0.9,), RngSeed(7)), table=table)
    assert rep.critical_source == "table"
    assert not rep.reject
    bad = tmp_path / "bad.csv"
    bad.write_text("k,level,value\n2,0.95,1\n")
    with pytest.raises(ValueError):
        load_critical_table(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        LimitSimConfig(100, (1.5,))
    with pytest.raises(ValueError):
        LimitSimConfig(0)


def test_null_size_white_noise_n200():
    design = ExperimentDesign(ARParams(0.0, (0.0,)), 200, mc_reps=500, test_kind="asymptotic",
                              seed=RngSeed(20240620), n_sim=2000)
    rate = run_size_experiment([design]).rows[0]["sLMa"]
    print(f"sLMa size, phi1=0, n=200: {rate:.1f}%")
    assert 2.5 <= rate <= 7.5


def test_standard_basis_matches_standardised_series(ar1):
    x, fit = ar1
    v = x.values
    std = x.affine(1 / v.std(), -v.mean() / v.std())
    sfit = fit_ar(std, 1)
    r = float(np.median(v))
    raw = information_blocks(x, fit, ThresholdGrid(1, [r]))
    ref = information_blocks(std, sfit, ThresholdGrid(1, [(r - v.mean()) / v.std()]))
    m = standard_basis(x, 1)
    assert_allclose(m.T @ raw.i11 @ m, ref.i11, rtol=1e-9)
    assert_allclose(m.T @ raw.i22_of_r[0] @ m, ref.i22_of_r[0], rtol=1e-9, atol=1e-9)


def test_score_factor_reproduces_kernel(ar1):
    x, fit = ar1
    grid = build_grid(x, 1, 1)
    cand, kern = kernel_blocks(x, fit, grid)
    cand2, a = score_factor(x, fit, grid)
    assert_array_equal(cand, cand2)
    gram = np.einsum("ink,jnl->ijkl", a, a) / fit.n_eff
    assert_allclose(gram, kern, rtol=1e-9, atol=1e-11)
