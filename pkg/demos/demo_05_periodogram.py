"""
Periodogram of a cycling series
===============================

A raw periodogram at the Fourier frequencies, the support tool for
locating a population cycle before fitting threshold models.
"""

import numpy as np

from tarboot import periodogram

rng = np.random.default_rng(5)
t = np.arange(72)
counts = 40 + 25 * np.sin(2 * np.pi * t / 6) + rng.normal(0, 5, t.size)
series = np.sqrt(np.clip(counts, 0, None))

pg = periodogram(series)
print(f"peak at f = {pg.peak_frequency():.4f} (period {1 / pg.peak_frequency():.1f} weeks)")
print(pg.to_csv().splitlines()[:4])
