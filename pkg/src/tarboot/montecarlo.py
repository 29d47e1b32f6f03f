"""Monte Carlo size and power experiments for the bootstrap and asymptotic supLM tests.

Every replicate draws its data and its bootstrap / limit-simulation streams
from ``design.seed.derive(stream_key, replicate)``. Within a power study all
designs share the null design's stream key, so each replicate sees the same
innovations whatever the size of the regime shift (common random numbers).
"""

from __future__ import annotations

import configparser
import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from .arfit import select_order_aic
from .asymptotic import LimitSimConfig, asymptotic_test
from .bootstrap import BootstrapConfig, bootstrap_test
from .core import DEFAULT_BURN_IN, ARParams, RngSeed, TARParams, simulate
from .exceptions import ConfigError, DegeneracyError, TooManyFailures
from .suplm import DEFAULT_LOWER_Q, DEFAULT_UPPER_Q

TEST_KINDS = ("bootstrap", "asymptotic", "both")
#: Replicates per work unit; fixed so results never depend on the worker count.
REP_CHUNK = 20
MAX_FAILURE_RATE = 0.05


@dataclass(frozen=True)
class OrderPolicy:
    """``fixed`` order ``value``, or ``aic`` selection over ``1..value``."""

    kind: str = "fixed"
    value: int = 1

    def __post_init__(self):
        if self.kind not in ("fixed", "aic"):
            raise ValueError(f"order policy must be 'fixed' or 'aic', got {self.kind!r}")
        if self.value < (0 if self.kind == "fixed" else 1):
            raise ValueError(f"invalid order {self.value} for policy {self.kind}")

    @classmethod
    def parse(cls, text: str) -> "OrderPolicy":
        kind, _, value = text.strip().partition(":")
        return cls(kind.strip(), int(value))

    def choose(self, series) -> int:
        if self.kind == "fixed":
            return self.value
        return select_order_aic(series, self.value)

    def __str__(self):
        return f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class ExperimentDesign:
    dgp: Union[ARParams, TARParams]
    n: int
    mc_reps: int = 500
    bootstrap_B: int = 399
    alpha: float = 0.05
    order_policy: OrderPolicy = OrderPolicy("fixed", 1)
    test_kind: str = "both"
    seed: RngSeed = RngSeed()
    d: int = 1
    lower_q: float = DEFAULT_LOWER_Q
    upper_q: float = DEFAULT_UPPER_Q
    n_sim: int = 2000
    burn_in: int = DEFAULT_BURN_IN
    label: str = ""

    def __post_init__(self):
        if self.mc_reps < 1:
            raise ValueError("mc_reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.test_kind not in TEST_KINDS:
            raise ValueError(f"test_kind must be one of {TEST_KINDS}")

    @property
    def runs_bootstrap(self):
        return self.test_kind in ("bootstrap", "both")

    @property
    def runs_asymptotic(self):
        return self.test_kind in ("asymptotic", "both")


@dataclass
class Outcomes:
    """Per-replicate results of one design (NaN where a test was not run or failed)."""

    statistic: np.ndarray
    p_boot: np.ndarray
    p_asym: np.ndarray
    reject_boot: np.ndarray
    reject_asym: np.ndarray
    order: np.ndarray
    errors: List[Optional[str]]

    @property
    def failures(self) -> int:
        return sum(e is not None for e in self.errors)


def run_replicate(design: ExperimentDesign, rep_seed: RngSeed) -> dict:
    """Simulate one series and run the configured test(s) on it."""
    x = simulate(design.dgp, design.n, design.burn_in, rep_seed.stream(0))
    out = {"statistic": np.nan, "p_boot": np.nan, "p_asym": np.nan,
           "reject_boot": False, "reject_asym": False, "order": -1, "error": None}
    try:
        p = design.order_policy.choose(x)
        out["order"] = p
        if design.runs_bootstrap:
            cfg = BootstrapConfig(design.bootstrap_B, rep_seed, p, design.d,
                                  design.lower_q, design.upper_q)
            rep = bootstrap_test(x, cfg)
            out["statistic"] = rep.statistic
            out["p_boot"] = rep.p_value
            out["reject_boot"] = rep.reject(design.alpha)
        if design.runs_asymptotic:
            lim = LimitSimConfig(design.n_sim, (1 - design.alpha,), rep_seed.derive(1))
            rep = asymptotic_test(x, p, design.d, design.lower_q, design.upper_q, lim, design.alpha)
            out["statistic"] = rep.statistic
            out["p_asym"] = rep.p_value
            out["reject_asym"] = rep.reject
    except (DegeneracyError, TooManyFailures) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    return out


def _run_chunk(design, stream_key, reps):
    return [run_replicate(design, design.seed.derive(stream_key, r)) for r in reps]


def run_design(design: ExperimentDesign, stream_key: int = 0, workers: int = 1) -> Outcomes:
    chunks = [list(range(s, min(s + REP_CHUNK, design.mc_reps)))
              for s in range(0, design.mc_reps, REP_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [design] * len(chunks),
                                  [stream_key] * len(chunks), chunks))
    else:
        parts = [_run_chunk(design, stream_key, c) for c in chunks]
    recs = [r for part in parts for r in part]
    out = Outcomes(
        statistic=np.array([r["statistic"] for r in recs]),
        p_boot=np.array([r["p_boot"] for r in recs]),
        p_asym=np.array([r["p_asym"] for r in recs]),
        reject_boot=np.array([r["reject_boot"] for r in recs]),
        reject_asym=np.array([r["reject_asym"] for r in recs]),
        order=np.array([r["order"] for r in recs]),
        errors=[r["error"] for r in recs],
    )
    if out.failures > MAX_FAILURE_RATE * design.mc_reps:
        first = next(e for e in out.errors if e is not None)
        raise TooManyFailures(
            f"{out.failures} of {design.mc_reps} replicates failed for design "
            f"{describe(design)['label']!r} (first: {first})",
            failures=out.failures, total=design.mc_reps,
        )
    return out


# ---------------------------------------------------------------------------
# tables


def describe(design: ExperimentDesign) -> dict:
    dgp = design.dgp
    base = dgp.base if isinstance(dgp, TARParams) else dgp
    psi = ""
    if isinstance(dgp, TARParams):
        shifts = {dgp.delta_intercept, *dgp.delta_coeffs}
        psi = f"{shifts.pop():g}" if len(shifts) == 1 else " ".join(
            f"{v:g}" for v in (dgp.delta_intercept, *dgp.delta_coeffs))
    coeffs = " ".join(f"{c:g}" for c in base.coeffs)
    label = design.label or f"phi0={base.intercept:g} phi=({coeffs})" + (
        f" psi={psi}" if psi else "") + f" n={design.n}"
    return {
        "label": label,
        "family": "tar" if isinstance(dgp, TARParams) else "ar",
        "intercept": f"{base.intercept:g}",
        "coeffs": coeffs,
        "psi": psi,
        "n": design.n,
        "order_policy": str(design.order_policy),
    }


COLUMNS = ["label", "family", "intercept", "coeffs", "psi", "n", "order_policy",
           "mc_reps", "B", "sLMa", "sLMb", "sLMa_sc", "sLMb_sc", "failures", "mean_order"]


@dataclass
class RejectionTable:
    """Rejection percentages, one row per design.

    ``sLMa_sc`` / ``sLMb_sc`` (size corrected) are only filled by power
    experiments. ``outcomes`` keeps the per-replicate data for each row.
    """

    rows: List[dict] = field(default_factory=list)
    outcomes: List[Outcomes] = field(default_factory=list)
    designs: List[ExperimentDesign] = field(default_factory=list)

    def add(self, design, outcomes, extra=None):
        reps = design.mc_reps
        row = describe(design)
        row.update({
            "mc_reps": reps,
            "B": design.bootstrap_B if design.runs_bootstrap else "",
            "sLMa": 100.0 * outcomes.reject_asym.sum() / reps if design.runs_asymptotic else None,
            "sLMb": 100.0 * outcomes.reject_boot.sum() / reps if design.runs_bootstrap else None,
            "sLMa_sc": None,
            "sLMb_sc": None,
            "failures": outcomes.failures,
            "mean_order": float(np.mean(outcomes.order[outcomes.order >= 0]))
            if np.any(outcomes.order >= 0) else None,
        })
        row.update(extra or {})
        self.rows.append(row)
        self.outcomes.append(outcomes)
        self.designs.append(design)

    def column(self, name):
        return [row[name] for row in self.rows]

    @staticmethod
    def _fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([self._fmt(row.get(c)) for c in COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_text(self) -> str:
        cols = [c for c in COLUMNS if any(row.get(c) not in (None, "") for row in self.rows)]
        cells = [cols] + [[self._fmt(row.get(c)) for c in cols] for row in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in cells]
        lines.insert(1, "  ".join("-" * wd for wd in widths))
        return "\n".join(lines)

    __str__ = to_text


# ---------------------------------------------------------------------------
# experiments


def run_size_experiment(designs: Sequence[ExperimentDesign], workers: int = 1) -> RejectionTable:
    """Rejection rates under linear AR nulls."""
    table = RejectionTable()
    for i, design in enumerate(designs):
        if not isinstance(design.dgp, ARParams):
            raise ValueError(f"size experiments need AR null DGPs (design {i})")
        table.add(design, run_design(design, i, workers))
    return table


def size_corrected_critical(null_scores: np.ndarray, alpha: float) -> float:
    """Empirical ``1 - alpha`` quantile (linear interpolation) of null scores."""
    s = null_scores[~np.isnan(null_scores)]
    return float(np.quantile(s, 1 - alpha))


def _boot_score(outcomes: Outcomes) -> np.ndarray:
    # larger = more evidence against the null
    return 1.0 - outcomes.p_boot


def _asym_stat(outcomes: Outcomes) -> np.ndarray:
    return np.where(np.isnan(outcomes.p_asym), np.nan, outcomes.statistic)


def _same_experiment(alt: ExperimentDesign, null: ExperimentDesign) -> bool:
    dgp = alt.dgp
    if isinstance(dgp, TARParams) and _is_null(dgp):
        dgp = dgp.base
    return replace(alt, dgp=dgp, label="") == replace(null, label="")


def run_power_experiment(null_design: ExperimentDesign, alt_designs: Sequence[ExperimentDesign],
                         workers: int = 1) -> RejectionTable:
    """Raw and size-corrected rejection rates under threshold alternatives.

    The size-corrected critical value for each test is the empirical
    ``1 - alpha`` quantile of its null scores (the statistic for the
    asymptotic test, one minus the p-value for the bootstrap test), and an
    alternative replicate rejects when its score is strictly above it.
    Alternatives share the null design's random streams.
    """
    null_out = run_design(null_design, 0, workers)
    alpha = null_design.alpha
    cv = {}
    if null_design.runs_bootstrap:
        cv["bootstrap"] = size_corrected_critical(_boot_score(null_out), alpha)
    if null_design.runs_asymptotic:
        cv["asymptotic"] = size_corrected_critical(_asym_stat(null_out), alpha)
    table = RejectionTable()
    for design in alt_designs:
        if design.n != null_design.n:
            raise ValueError("alternatives must share the null design's sample size")
        # a zero shift reproduces the null data bit for bit, so reuse it
        out = null_out if _same_experiment(design, null_design) else run_design(design, 0, workers)
        extra = {}
        reps = design.mc_reps
        if "bootstrap" in cv:
            s = _boot_score(out)
            extra["sLMb_sc"] = 100.0 * np.count_nonzero(s > cv["bootstrap"]) / reps
        if "asymptotic" in cv:
            s = _asym_stat(out)
            extra["sLMa_sc"] = 100.0 * np.count_nonzero(s > cv["asymptotic"]) / reps
        table.add(design, out, extra)
    return table


def _is_null(dgp: TARParams) -> bool:
    return dgp.delta_intercept == 0 and all(c == 0 for c in dgp.delta_coeffs)


def run_order_selection_experiment(designs: Sequence[ExperimentDesign], workers: int = 1,
                                   null_design: Optional[ExperimentDesign] = None) -> RejectionTable:
    """Rejection rates when each replicate picks its own AR order first.

    Any DGP is accepted; with ``null_design`` the designs are treated as
    alternatives and size-corrected columns are added as in
    :func:`run_power_experiment`.
    """
    if null_design is not None:
        return run_power_experiment(null_design, designs, workers)
    table = RejectionTable()
    for i, design in enumerate(designs):
        table.add(design, run_design(design, i, workers))
    return table


# ---------------------------------------------------------------------------
# declarative configuration


def _num_list(section, key, cast=float, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"{section.name}.{key}", "missing")
        return default
    raw = section[key]
    try:
        items = [cast(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{section.name}.{key}", f"cannot parse {raw!r}") from None
    if not items:
        raise ConfigError(f"{section.name}.{key}", "empty list")
    return items


def _vec_list(section, key):
    if key not in section:
        raise ConfigError(f"{section.name}.{key}", "missing")
    out = []
    for chunk in section[key].split(","):
        if not chunk.strip():
            continue
        try:
            out.append(tuple(float(v) for v in chunk.split()))
        except ValueError:
            raise ConfigError(f"{section.name}.{key}", f"cannot parse {chunk!r}") from None
    if not out:
        raise ConfigError(f"{section.name}.{key}", "empty list")
    return out


def _scalar(section, key, cast, default=None, check=None, msg=""):
    name = f"{section.name}.{key}"
    if key not in section:
        if default is None:
            raise ConfigError(name, "missing")
        return default
    try:
        value = cast(section[key])
    except ValueError:
        raise ConfigError(name, f"cannot parse {section[key]!r}") from None
    if check is not None and not check(value):
        raise ConfigError(name, msg)
    return value


@dataclass
class ExperimentPlan:
    """A parsed configuration: what to run and how to name the output."""

    name: str
    kind: str
    designs: List[ExperimentDesign]
    nulls: List[Optional[ExperimentDesign]]
    workers: int = 1

    def run(self) -> RejectionTable:
        if self.kind == "size":
            return run_order_selection_experiment(self.designs, self.workers)
        table = RejectionTable()
        groups = {}
        for design, null in zip(self.designs, self.nulls):
            groups.setdefault(id(null), (null, []))[1].append(design)
        for null, alts in groups.values():
            part = run_power_experiment(null, alts, self.workers)
            table.rows += part.rows
            table.outcomes += part.outcomes
            table.designs += part.designs
        return table


def parse_config(text: str) -> ExperimentPlan:
    """Parse an INI experiment description (see README for the schema)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc)) from None
    for sec in ("experiment", "dgp"):
        if sec not in cp:
            raise ConfigError(sec, "section missing")
    ex, dg = cp["experiment"], cp["dgp"]
    kind = ex.get("kind", "size").strip()
    if kind not in ("size", "power"):
        raise ConfigError("experiment.kind", "must be 'size' or 'power'")
    seed = _scalar(ex, "seed", int, check=lambda v: 0 <= v < 2**64, msg="must be a 64-bit unsigned integer")
    reps = _scalar(ex, "mc_reps", int, 500, lambda v: v >= 1, "must be a positive integer")
    B = _scalar(ex, "bootstrap_B", int, 399, lambda v: v >= 1, "must be a positive integer")
    alpha = _scalar(ex, "alpha", float, 0.05, lambda v: 0 < v < 1, "must lie in (0, 1)")
    tests = ex.get("tests", "both").strip()
    if tests not in TEST_KINDS:
        raise ConfigError("experiment.tests", f"must be one of {', '.join(TEST_KINDS)}")
    try:
        policy = OrderPolicy.parse(ex.get("order", "fixed:1"))
    except ValueError as exc:
        raise ConfigError("experiment.order", str(exc)) from None
    d = _scalar(ex, "delay", int, 1, lambda v: v >= 1, "must be >= 1")
    lq = _scalar(ex, "lower_q", float, DEFAULT_LOWER_Q)
    uq = _scalar(ex, "upper_q", float, DEFAULT_UPPER_Q)
    if not 0 < lq < uq < 1:
        raise ConfigError("experiment.lower_q", "need 0 < lower_q < upper_q < 1")
    n_sim = _scalar(ex, "n_sim", int, 2000, lambda v: v >= 100, "must be >= 100")
    burn = _scalar(ex, "burn_in", int, DEFAULT_BURN_IN, lambda v: v >= 0, "must be >= 0")
    workers = _scalar(ex, "workers", int, 1, lambda v: v >= 1, "must be >= 1")

    family = dg.get("family", "ar").strip()
    if family not in ("ar", "tar"):
        raise ConfigError("dgp.family", "must be 'ar' or 'tar'")
    intercepts = _num_list(dg, "intercept", required=False, default=[0.0])
    coeff_sets = _vec_list(dg, "coeffs")
    ns = _num_list(dg, "n", int)
    if any(n < 1 for n in ns):
        raise ConfigError("dgp.n", "sample sizes must be positive")
    sd = _scalar(dg, "noise_sd", float, 1.0, lambda v: v > 0, "must be positive")
    psis = _num_list(dg, "psi", required=family == "tar", default=[0.0])
    thr = _scalar(dg, "threshold", float, 0.0)
    tar_delay = _scalar(dg, "tar_delay", int, 1, lambda v: v >= 1, "must be >= 1")
    if kind == "power" and family != "tar":
        raise ConfigError("dgp.family", "power experiments need family = tar")

    common = dict(mc_reps=reps, bootstrap_B=B, alpha=alpha, order_policy=policy,
                  test_kind=tests, seed=RngSeed(seed), d=d, lower_q=lq, upper_q=uq,
                  n_sim=n_sim, burn_in=burn)
    designs, nulls = [], []
    for n in ns:
        for c0 in intercepts:
            for cs in coeff_sets:
                base = ARParams(c0, cs, sd)
                if family == "ar":
                    designs.append(ExperimentDesign(base, n, **common))
                    nulls.append(None)
                    continue
                null = ExperimentDesign(base, n, **common)
                for psi in psis:
                    tar = TARParams.uniform_shift(base, psi, thr, tar_delay)
                    designs.append(ExperimentDesign(tar, n, **common))
                    nulls.append(null if kind == "power" else None)
    if not designs:
        raise ConfigError("dgp", "no designs")
    name = ex.get("name", "experiment").strip()
    return ExperimentPlan(name, kind, designs, nulls, workers)


def load_config(path) -> ExperimentPlan:
    with open(path) as fh:
        return parse_config(fh.read())
