"""Command line entry point: ``maxharm run | list | validate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from . import __version__
from .config import EXPERIMENTS, REQUIRED_KEYS, ConfigError, ExperimentConfig, parse_config
from .verification import BudgetExceeded, ExperimentAbort, RatioReport, run_experiment

log = logging.getLogger("maxharm")

EXIT_PASS, EXIT_ERROR, EXIT_VERDICT, EXIT_BUDGET = 0, 1, 2, 3
CASE_COLUMNS = ("case_id", "sweep_k", "lhs", "rhs", "ratio")
SLOPE_COLUMNS = ("label", "slope", "intercept", "band", "limit", "band_limit", "passed")


@dataclass
class RunManifest:
    config_path: Path
    config: ExperimentConfig
    version: str
    seed: int
    out_dir: Path
    budget_seconds: Optional[float]
    threads: int


def bundled_config_path(experiment: str) -> Path:
    return Path(str(resources.files("maxharm") / "configs" / f"{experiment}.json"))


def list_experiments() -> str:
    lines = []
    for name in sorted(EXPERIMENTS):
        lines.append(f"{name}: {EXPERIMENTS[name]}")
        lines.append(f"    required keys: {', '.join(REQUIRED_KEYS[name])}")
    return "\n".join(lines)


def _json_safe(obj):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if hasattr(obj, "item"):
        return _json_safe(obj.item())
    return obj


def report_document(report: RatioReport, manifest: RunManifest) -> dict:
    doc = report.to_dict()
    doc["config"] = manifest.config.to_dict()
    doc["seed"] = manifest.seed
    doc["version"] = manifest.version
    return _json_safe(doc)


def write_outputs(report: RatioReport, manifest: RunManifest) -> None:
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    doc = report_document(report, manifest)
    (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")
    with open(out / "ratios.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CASE_COLUMNS)
        for c in report.cases:
            w.writerow([c.case_id, repr(float(c.sweep_k)), repr(c.lhs), repr(c.rhs), repr(c.ratio)])
    with open(out / "slopes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SLOPE_COLUMNS)
        for f in report.fits:
            w.writerow([f.label, repr(f.slope), repr(f.intercept), repr(f.band), repr(f.limit),
                        "" if f.band_limit is None else repr(f.band_limit), f.passed])


def resolve_threads(arg: Optional[int]) -> int:
    if arg is None:
        env = os.environ.get("MAXHARM_THREADS")
        arg = int(env) if env else 1
    if arg == 0:
        arg = os.cpu_count() or 1
    if arg < 0:
        raise ValueError("--threads must be >= 0")
    return arg


def run(manifest: RunManifest) -> int:
    """Execute a manifest, write the three outputs, return the exit code."""
    start = time.monotonic()
    try:
        report = run_experiment(manifest.config, manifest.threads, manifest.seed, manifest.budget_seconds)
    except BudgetExceeded as exc:
        report = RatioReport(manifest.config.experiment, partial=True)
        report.cases = sorted(exc.records, key=lambda c: (c.case_id, c.sweep_k))
        write_outputs(report, manifest)
        log.error("budget of %s s exceeded; partial report written", manifest.budget_seconds)
        return EXIT_BUDGET
    except ExperimentAbort as exc:
        log.error("experiment aborted: %s", exc)
        return EXIT_ERROR
    log.info("%s finished in %.1f s", manifest.config.experiment, time.monotonic() - start)
    write_outputs(report, manifest)
    if report.verdict:
        log.info("verdict: pass")
        return EXIT_PASS
    failed = [f.label for f in report.fits if not f.passed]
    failed += [k for k, c in report.checks.items() if c.asserted and not c.passed]
    log.warning("verdict: fail (%s)", ", ".join(failed) or "non-finite ratio")
    return EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxharm", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=".", help="output directory (default: current directory)")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument("--threads", type=int, default=None, help="worker threads, 0 = all cores")
    r.add_argument("--budget", type=float, default=None, help="wall-clock budget in seconds")
    r.add_argument("--dry-run", action="store_true", help="validate only, write nothing")
    sub.add_parser("list", help="list experiments")
    v = sub.add_parser("validate", help="validate a config")
    v.add_argument("config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "list":
        print(list_experiments())
        return EXIT_PASS
    try:
        cfg = parse_config(args.config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "validate":
        print(f"{args.config}: valid {cfg.experiment} config")
        return EXIT_PASS
    try:
        threads = resolve_threads(args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.dry_run:
        print(f"{args.config}: valid {cfg.experiment} config (dry run, nothing written)")
        return EXIT_PASS
    seed = cfg.seed if args.seed is None else args.seed
    if args.seed is not None:
        cfg.seed = seed
    manifest = RunManifest(Path(args.config), cfg, __version__, seed, Path(args.out),
                           args.budget if args.budget is not None else cfg.budget_seconds, threads)
    try:
        return run(manifest)
    except Exception as exc:  # execution error: report and exit 1
        log.exception("execution error: %s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
