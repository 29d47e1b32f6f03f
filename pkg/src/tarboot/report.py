"""Test report shared by the bootstrap and asymptotic routes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import RngSeed

SCHEMA_VERSION = "1"


@dataclass
class TestReport:
    """Outcome of one supLM test on one series.

    ``mode`` is ``"bootstrap"`` (``p_value`` from ``replicates`` resamples)
    or ``"asymptotic"`` (``p_value`` is the share of simulated limit draws at
    or above the statistic; ``critical_values`` maps level to value).
    """

    __test__ = False  # not a pytest class

    mode: str
    statistic: float
    argmax_threshold: float
    p: int
    d: int
    p_value: float
    alpha: float = 0.05
    reject: bool = False
    critical_values: Dict[float, float] = field(default_factory=dict)
    replicates: Optional[int] = None
    failures: int = 0
    seed: Optional[RngSeed] = None
    grid_size: int = 0
    skipped: List[Tuple[float, str]] = field(default_factory=list)
    critical_source: str = ""

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "statistic": self.statistic,
            "argmax_threshold": self.argmax_threshold,
            "p": self.p,
            "d": self.d,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
        }
        if self.mode == "bootstrap":
            out["replicates"] = self.replicates
            out["failures"] = self.failures
        else:
            out["critical_values"] = {f"{k:g}": v for k, v in sorted(self.critical_values.items())}
            out["critical_source"] = self.critical_source
        if self.seed is not None:
            out["seed"] = {"seed": self.seed.seed, "stream_id": self.seed.stream_id}
        out["grid_size"] = self.grid_size
        out["skipped"] = [[float(r), why] for r, why in self.skipped]
        return out

