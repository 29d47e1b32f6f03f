"""Domain types, reproducible random streams and AR / TAR simulators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_BURN_IN = 500

_UINT64 = 2**64


@dataclass(frozen=True)
class TimeSeries:
    """A finite, real valued series.

    ``values`` is stored as a read-only float64 array.
    """

    values: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size < 1:
            raise ValueError("a TimeSeries needs at least one value")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite value at position {bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def affine(self, scale: float, shift: float) -> "TimeSeries":
        return TimeSeries(scale * self.values + shift, self.label)


def as_series(data) -> TimeSeries:
    if isinstance(data, TimeSeries):
        return data
    return TimeSeries(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True)
class ARParams:
    """Linear AR(p) recursion ``X_t = intercept + sum_i coeffs[i-1] X_{t-i} + noise_sd * e_t``."""

    intercept: float = 0.0
    coeffs: Sequence[float] = ()
    noise_sd: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "intercept", float(self.intercept))
        if not self.noise_sd > 0:
            raise ValueError(f"noise_sd must be positive, got {self.noise_sd}")

    @property
    def order(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class TARParams:
    """Two-regime threshold AR.

    The lower regime (``X_{t-delay} <= threshold``) adds ``delta_intercept``
    and ``delta_coeffs`` to the base AR parameters.
    """

    base: ARParams
    delta_intercept: float = 0.0
    delta_coeffs: Sequence[float] = ()
    threshold: float = 0.0
    delay: int = 1

    def __post_init__(self):
        delta = tuple(float(c) for c in np.atleast_1d(np.asarray(self.delta_coeffs, dtype=float)))
        if len(delta) == 0:
            delta = (0.0,) * self.base.order
        if len(delta) != self.base.order:
            raise ValueError(
                f"delta_coeffs has length {len(delta)}, base order is {self.base.order}"
            )
        if int(self.delay) < 1:
            raise ValueError(f"delay must be >= 1, got {self.delay}")
        object.__setattr__(self, "delta_coeffs", delta)
        object.__setattr__(self, "delta_intercept", float(self.delta_intercept))
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "delay", int(self.delay))

    @property
    def order(self) -> int:
        return self.base.order

    @classmethod
    def uniform_shift(cls, base: ARParams, psi: float, threshold: float = 0.0, delay: int = 1):
        """Every regime difference (intercept and each lag) set to ``psi``."""
        return cls(base, psi, (psi,) * base.order, threshold, delay)


@dataclass(frozen=True)
class RngSeed:
    """Names one random stream.

    Streams are Philox4x64 counter blocks: ``seed`` is the key and
    ``stream_id`` occupies the top word of the 256-bit counter, so distinct
    stream ids never overlap.
    """

    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = int(getattr(self, name))
            if not 0 <= v < _UINT64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {v}")
            object.__setattr__(self, name, v)

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(key=self.seed, counter=[0, 0, 0, self.stream_id])
        return np.random.Generator(bitgen)

    def stream(self, stream_id: int) -> "RngSeed":
        return RngSeed(self.seed, stream_id)

    def derive(self, *keys: int) -> "RngSeed":
        """A new key hashed from this seed, its stream id and ``keys``."""
        ss = np.random.SeedSequence([self.seed, self.stream_id, *[int(k) for k in keys]])
        return RngSeed(int(ss.generate_state(1, np.uint64)[0]), 0)


def _recursion(x0, intercept, coeffs, dintercept, dcoeffs, threshold, delay, innovations):
    """Run the TAR recursion after a history ``x0`` and return the new values.

    ``x0`` must hold at least max(p, delay) values. A regime shift of exactly
    zero adds ``0.0`` and therefore leaves the AR path unchanged bit for bit.
    """
    p = len(coeffs)
    hist = [float(v) for v in x0]
    h = len(hist)
    out = hist + [0.0] * len(innovations)
    shift = any(c != 0.0 for c in dcoeffs) or dintercept != 0.0
    for k, e in enumerate(innovations.tolist()):
        t = h + k
        acc = intercept
        for i in range(p):
            acc += coeffs[i] * out[t - 1 - i]
        if shift and out[t - delay] <= threshold:
            g = dintercept
            for i in range(p):
                g += dcoeffs[i] * out[t - 1 - i]
            acc += g
        out[t] = acc + e
    return np.array(out[h:])


def simulate_tar(params: TARParams, n: int, burn_in: int = DEFAULT_BURN_IN, rng: RngSeed = RngSeed()) -> TimeSeries:
    """Simulate ``n`` observations of a TAR process with Gaussian noise.

    The recursion starts from zeros; the first ``burn_in`` generated values
    are dropped.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    base = params.base
    eps = base.noise_sd * rng.generator().standard_normal(burn_in + n)
    hist = np.zeros(max(base.order, params.delay))
    x = _recursion(
        hist, base.intercept, base.coeffs, params.delta_intercept, params.delta_coeffs,
        params.threshold, params.delay, eps,
    )
    return TimeSeries(x[burn_in:])


def simulate_ar(params: ARParams, n: int, burn_in: int = DEFAULT_BURN_IN, rng: RngSeed = RngSeed()) -> TimeSeries:
    """Simulate ``n`` observations of a Gaussian AR(p) process."""
    return simulate_tar(TARParams(params), n, burn_in, rng)


def simulate(dgp, n: int, burn_in: int = DEFAULT_BURN_IN, rng: RngSeed = RngSeed()) -> TimeSeries:
    if isinstance(dgp, TARParams):
        return simulate_tar(dgp, n, burn_in, rng)
    return simulate_ar(dgp, n, burn_in, rng)


def stationary_variance(phi1: float, noise_sd: float = 1.0) -> float:
    if abs(phi1) >= 1:
        return math.inf
    return noise_sd**2 / (1 - phi1**2)
