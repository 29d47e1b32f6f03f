"""
Simulated asymptotic critical values
====================================

The asymptotic test compares the statistic with quantiles of the supremum
of a Gaussian quadratic-form process whose kernel is estimated from the
data. With a single threshold the supremum is a chi-square variable.
"""

import numpy as np
from scipy import stats

from tarboot import ARParams, RngSeed, ThresholdGrid, build_grid, simulate_ar
from tarboot.asymptotic import LimitSimConfig, asymptotic_critical_values
from tarboot.suplm import fit_for_test

x = simulate_ar(ARParams(0.0, ()), 200, rng=RngSeed(1))
fit = fit_for_test(x, 0, 1)
one = ThresholdGrid(1, [np.median(x.values[:-1])])
cv = asymptotic_critical_values(x, fit, one, LimitSimConfig(100_000, (0.95,), RngSeed(2)))
print(f"single threshold: {cv[0]:.3f} vs chi2(1) {stats.chi2.ppf(0.95, 1):.3f}")

###############################################################################
# Over the full grid the supremum is larger; dependence on phi1 comes in
# through the estimated kernel.

for phi in (0.0, 0.5, 0.9):
    x = simulate_ar(ARParams(0.0, (phi,)), 200, rng=RngSeed(3))
    fit = fit_for_test(x, 1, 1)
    cv = asymptotic_critical_values(x, fit, build_grid(x, 1, 1),
                                    LimitSimConfig(20_000, (0.9, 0.95, 0.99), RngSeed(4)))
    print(f"phi1 = {phi}: " + ", ".join(f"{v:.2f}" for v in cv))
