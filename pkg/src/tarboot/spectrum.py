"""Raw periodogram at the Fourier frequencies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_series


@dataclass(frozen=True)
class Periodogram:
    frequencies: np.ndarray
    power: np.ndarray

    def peak_frequency(self) -> float:
        return float(self.frequencies[np.argmax(self.power)])

    def to_csv(self) -> str:
        lines = ["frequency,power"]
        lines += [f"{f!r},{p!r}" for f, p in zip(self.frequencies.tolist(), self.power.tolist())]
        return "\n".join(lines) + "\n"


def periodogram(series) -> Periodogram:
    """``|sum_t (X_t - mean) exp(-2 pi i f t)|^2 / n`` at ``f = j/n``, ``j = 1..n//2``.

    No tapering or smoothing.
    """
    x = as_series(series).values
    n = x.size
    if n < 8:
        raise ValueError(f"periodogram needs at least 8 observations, got {n}")
    dft = np.fft.rfft(x - x.mean())
    j = np.arange(1, n // 2 + 1)
    power = np.abs(dft[j]) ** 2 / n
    return Periodogram(j / n, power)
