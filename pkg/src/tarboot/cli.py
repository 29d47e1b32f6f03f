"""Command line front end: ``tarboot test | mc | spectrum``.

Exit codes: 0 success, 1 input/configuration problems, 2 statistical
degeneracy (singular design, degenerate grid, ...).
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .arfit import select_order_aic
from .asymptotic import LimitSimConfig, asymptotic_test, load_critical_table
from .bootstrap import BootstrapConfig, bootstrap_test
from .core import RngSeed
from .exceptions import ConfigError, DegeneracyError, SeriesFileError
from .montecarlo import load_config
from .report import SCHEMA_VERSION, TestReport
from .series_io import read_series
from .spectrum import periodogram

SEED_ENV = "TARBOOT_SEED"


def versions() -> dict:
    return {"tarboot": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _order(value: str):
    if value == "auto":
        return value
    try:
        p = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a non-negative integer") from None
    if p < 0:
        raise argparse.ArgumentTypeError("order must be >= 0")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tarboot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_series_args(p):
        p.add_argument("--file", required=True, help="CSV file holding the series")
        p.add_argument("--column", default=None, help="column name or 0-based index")
        p.add_argument("--sqrt", action="store_true", help="square-root transform the series")

    t = sub.add_parser("test", help="supLM threshold test on one series")
    add_series_args(t)
    t.add_argument("--p", type=_order, default="auto", help="AR order or 'auto' (AIC)")
    t.add_argument("--pmax", type=int, default=5, help="largest order tried by --p auto")
    t.add_argument("--d", type=int, default=1, help="threshold delay")
    t.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    t.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")
    t.add_argument("--qlo", type=float, default=0.25)
    t.add_argument("--qhi", type=float, default=0.75)
    t.add_argument("--mode", choices=["bootstrap", "asymptotic", "both"], default="bootstrap")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--nsim", type=int, default=10_000, help="limit-process draws (asymptotic)")
    t.add_argument("--table", default=None, help="optional critical-value table CSV")
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--format", choices=["both", "text", "json"], default="both")

    m = sub.add_parser("mc", help="run a Monte Carlo experiment from a config file")
    m.add_argument("--config", required=True)
    m.add_argument("--out-dir", required=True)
    m.add_argument("--workers", type=int, default=None, help="override the config's workers")

    s = sub.add_parser("spectrum", help="raw periodogram as CSV")
    add_series_args(s)
    s.add_argument("--out", default="-", help="output CSV (default stdout)")
    return parser


def _text_report(doc: dict) -> str:
    lines = [
        f"series: {doc['input']['file']} [{doc['input']['column']}], n = {doc['input']['n']}"
        + (" (sqrt)" if doc["input"]["sqrt"] else ""),
        f"AR order p = {doc['order']['p']} ({doc['order']['policy']}), delay d = {doc['d']}, "
        f"threshold range = quantiles [{doc['quantiles'][0]}, {doc['quantiles'][1]}]",
    ]
    first = next(iter(doc["tests"].values()))
    lines.append(f"supLM statistic = {first['statistic']:.4f} at threshold "
                 f"{first['argmax_threshold']:.6g} ({first['grid_size']} grid points, "
                 f"{len(first['skipped'])} skipped)")
    for mode, rep in doc["tests"].items():
        verdict = "reject" if rep["reject"] else "do not reject"
        if mode == "bootstrap":
            lines.append(f"bootstrap: p-value = {rep['p_value']:.4f} (B = {rep['replicates']}, "
                         f"{rep['failures']} failed) -> {verdict} at {rep['alpha']}")
        else:
            cv = ", ".join(f"{k}: {v:.3f}" for k, v in rep["critical_values"].items())
            lines.append(f"asymptotic: p-value = {rep['p_value']:.4f}, critical values "
                         f"({rep['critical_source']}) {cv} -> {verdict} at {rep['alpha']}")
    return "\n".join(lines)


def cmd_test(args) -> int:
    series = read_series(args.file, args.column, args.sqrt)
    seed = RngSeed(args.seed if args.seed is not None else _default_seed())
    if args.p == "auto":
        p = select_order_aic(series, args.pmax)
        order = {"policy": "aic", "pmax": args.pmax, "p": p}
    else:
        p = args.p
        order = {"policy": "fixed", "p": p}
    tests = {}
    if args.mode in ("bootstrap", "both"):
        cfg = BootstrapConfig(args.B, seed, p, args.d, args.qlo, args.qhi)
        rep = bootstrap_test(series, cfg, workers=args.workers)
        tests["bootstrap"] = TestReport(
            mode="bootstrap", statistic=rep.statistic,
            argmax_threshold=rep.observed.argmax_threshold, p=p, d=args.d,
            p_value=rep.p_value, alpha=args.alpha, reject=rep.reject(args.alpha),
            replicates=args.B, failures=rep.n_failures, seed=seed,
            grid_size=len(rep.observed.grid), skipped=rep.observed.skipped,
        ).to_dict()
    if args.mode in ("asymptotic", "both"):
        table = load_critical_table(args.table) if args.table else None
        lim = LimitSimConfig(args.nsim, (0.90, 0.95, 0.99), seed.derive(1))
        rep = asymptotic_test(series, p, args.d, args.qlo, args.qhi, lim, args.alpha, table)
        tests["asymptotic"] = rep.to_dict()
    doc = {
        "schema": f"tarboot.test/{SCHEMA_VERSION}",
        "versions": versions(),
        "input": {"file": str(args.file), "column": series.label, "sqrt": bool(args.sqrt),
                  "n": len(series)},
        "order": order,
        "d": args.d,
        "quantiles": [args.qlo, args.qhi],
        "seed": seed.seed,
        "tests": tests,
    }
    if args.format in ("both", "text"):
        print(_text_report(doc))
    if args.format == "both":
        print()
    if args.format in ("both", "json"):
        print(json.dumps(doc, indent=2))
    return 0


def cmd_mc(args) -> int:
    plan = load_config(args.config)
    if args.workers is not None:
        plan.workers = args.workers
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    table = plan.run()
    elapsed = time.perf_counter() - start
    csv_path = out / f"{plan.name}.csv"
    table.to_csv(csv_path)
    manifest = {
        "schema": f"tarboot.mc/{SCHEMA_VERSION}",
        "config": str(args.config),
        "name": plan.name,
        "kind": plan.kind,
        "seed": plan.designs[0].seed.seed,
        "designs": len(plan.designs),
        "workers": plan.workers,
        "tables": [csv_path.name],
        "versions": {**versions(), "python": platform.python_version()},
        "elapsed_seconds": round(elapsed, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(table.to_text())
    return 0


def cmd_spectrum(args) -> int:
    series = read_series(args.file, args.column, args.sqrt)
    text = periodogram(series).to_csv()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"test": cmd_test, "mc": cmd_mc, "spectrum": cmd_spectrum}[args.command]
    try:
        return handler(args)
    except DegeneracyError as exc:
        print(f"tarboot: statistical degeneracy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (SeriesFileError, ConfigError, OSError) as exc:
        print(f"tarboot: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"tarboot: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
