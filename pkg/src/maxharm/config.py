"""Experiment configuration: JSON schema, defaults and eager validation."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

SCHEMA_VERSION = 1

EXPERIMENTS = {
    "theorem11": "pointwise sharp-maximal bound for linear operators at the critical order",
    "theorem14": "pointwise sharp-maximal bound for bilinear operators at the critical order",
    "bmo_corollary": "L^inf x L^inf -> BMO bound at m = -(nl/2)(1 - rho)",
    "theorem15": "weighted norm inequality with multilinear A_p weights, plus the maximal characterization",
    "lebesgue_bounds": "L^r x ... x L^r -> L^q bounds for the whole operator or its dyadic pieces",
    "kernel_decay": "weighted L^r' decay rates of the Littlewood-Paley piece kernels",
    "trace": "trace inequality for diagonal restriction on product Sobolev spaces",
}

REQUIRED_KEYS = {
    "theorem11": ["experiment", "symbol.rho", "exponents.r"],
    "theorem14": ["experiment", "symbol.rho", "exponents.r"],
    "bmo_corollary": ["experiment", "symbol.rho"],
    "theorem15": ["experiment", "symbol.rho", "exponents.r", "exponents.p", "weights"],
    "lebesgue_bounds": ["experiment", "symbol.rho", "symbol.l", "exponents.r"],
    "kernel_decay": ["experiment", "symbol.rho", "exponents.r"],
    "trace": ["experiment", "trace.l"],
}

CUBE_EXPERIMENTS = {"theorem11", "theorem14", "bmo_corollary", "theorem15"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the violated constraint."""


@dataclass
class GridConfig:
    n: int = 1
    L: float = 32.0
    N: int = 512


@dataclass
class SymbolConfig:
    family: str = "dyadic_modulation"
    m: Optional[float] = None
    rho: float = 0.5
    delta: Optional[float] = None
    l: int = 1
    K: Optional[int] = None
    seed: int = 0


@dataclass
class SweepConfig:
    kind: str = "modulation"
    k: list = field(default_factory=lambda: [0, 1, 2, 3, 4, 5])
    base: float = 0.0625
    step: float = 1.0


@dataclass
class CorpusConfig:
    profiles: list = field(default_factory=lambda: ["gaussian", "modulated"])
    dilations: list = field(default_factory=lambda: [0.5, 0.75, 1.0])
    translations: list = field(default_factory=lambda: [0.0, 0.25, -0.5])
    size: int = 24
    sweep: SweepConfig = field(default_factory=SweepConfig)


@dataclass
class ExponentConfig:
    r: float = 2.0
    p: list = field(default_factory=lambda: [4.0, 4.0])
    t: Optional[float] = None
    lam: Optional[float] = None


@dataclass
class CubeConfig:
    min_side: int = 1
    max_side: Optional[int] = None
    dense_limit: int = 32
    coarse_fraction: int = 8


@dataclass
class KernelConfig:
    k: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    base_points: int = 4
    decay: Optional[float] = None


@dataclass
class TraceConfig:
    l: int = 2
    s: float = 0.5
    anisotropy: list = field(default_factory=lambda: [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
    modulation_k: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    modulation_base: float = 0.125
    corpus_size: int = 50


@dataclass
class ToleranceConfig:
    slope: float = 0.1
    band: float = 0.2
    kernel_slope: float = 0.15
    piece_slope: float = 0.15
    refinement: float = 0.2
    certification_ceiling: float = 1e4
    ap_ceiling: float = 10.0
    trace_spread: float = 10.0
    mask: float = 1e-8
    max_excluded: float = 0.5


@dataclass
class ExperimentConfig:
    experiment: str
    schema_version: int = SCHEMA_VERSION
    grid: GridConfig = field(default_factory=GridConfig)
    symbol: SymbolConfig = field(default_factory=SymbolConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    exponents: ExponentConfig = field(default_factory=ExponentConfig)
    cubes: CubeConfig = field(default_factory=CubeConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    weights: list = field(default_factory=list)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    probe_offset: Optional[float] = None
    refine: bool = True
    seed: int = 0
    budget_seconds: Optional[float] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def critical_order(self) -> Optional[float]:
        return critical_order(self.experiment, self.grid.n, self.symbol.l, self.exponents.r, self.symbol.rho)


def critical_order(experiment: str, n: int, l: int, r: float, rho: float) -> Optional[float]:
    """The order ``m`` each experiment's inequality is stated at."""
    if experiment == "theorem11":
        return -(n / r) * (1.0 - rho)
    if experiment in ("theorem14", "theorem15", "lebesgue_bounds"):
        return -(n * l / r) * (1.0 - rho)
    if experiment == "bmo_corollary":
        return -(n * l / 2.0) * (1.0 - rho)
    if experiment == "kernel_decay":
        return -(n * l / r) * (1.0 - rho)
    return None


# parsing ------------------------------------------------------------------------

def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(repr(u) for u in unknown)} in {path or 'config'}")
    kwargs = {}
    for key, value in data.items():
        f = names[key]
        sub = _NESTED.get((cls, key))
        kwargs[key] = _build(sub, value, f"{path}.{key}" if path else key) if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


_NESTED = {
    (ExperimentConfig, "grid"): GridConfig,
    (ExperimentConfig, "symbol"): SymbolConfig,
    (ExperimentConfig, "corpus"): CorpusConfig,
    (ExperimentConfig, "exponents"): ExponentConfig,
    (ExperimentConfig, "cubes"): CubeConfig,
    (ExperimentConfig, "kernel"): KernelConfig,
    (ExperimentConfig, "trace"): TraceConfig,
    (ExperimentConfig, "tolerances"): ToleranceConfig,
    (CorpusConfig, "sweep"): SweepConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if "experiment" not in data:
        raise ConfigError("missing required key 'experiment'")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
    cfg = _build(ExperimentConfig, data, "")
    validate(cfg)
    from .verification import check_feasibility

    try:
        check_feasibility(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read, default-fill and validate a JSON experiment config."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(b))


def validate(cfg: ExperimentConfig) -> None:
    """Check every precondition that can be checked without running."""
    e = cfg.experiment
    if e not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {e!r}; known: {', '.join(sorted(EXPERIMENTS))}")
    g = cfg.grid
    if g.n not in (1, 2):
        raise ConfigError("grid.n must be 1 or 2")
    if g.N < 2 or g.N & (g.N - 1):
        raise ConfigError("grid.N must be a power of two")
    if not g.L > 0:
        raise ConfigError("grid.L must be positive")
    if e == "trace":
        if cfg.trace.l not in (2, 3):
            raise ConfigError("trace.l must be 2 or 3 (memory guard)")
        if g.n != 1:
            raise ConfigError("trace experiment needs n = 1")
        if not cfg.trace.s > 0:
            raise ConfigError("trace.s must be positive")
        return
    s = cfg.symbol
    if not (0.0 < s.rho < 1.0):
        raise ConfigError("ρ ∈ (0,1) required")
    if s.delta is not None and not (0.0 <= s.delta <= s.rho):
        raise ConfigError("δ ∈ [0, ρ] required")
    if g.n != 1:
        raise ConfigError(f"experiment {e} needs n = 1 (symbols are one-dimensional)")
    r = cfg.exponents.r
    if not (1.0 < r <= 2.0):
        raise ConfigError("r ∈ (1,2] required")
    l = s.l
    if e == "theorem11" and l != 1:
        raise ConfigError("theorem11 is linear: symbol.l must be 1")
    if e in ("theorem14", "bmo_corollary", "theorem15") and l != 2:
        raise ConfigError(f"{e} runs with l = 2")
    if e in ("lebesgue_bounds", "kernel_decay") and l not in (1, 2):
        raise ConfigError("symbol.l must be 1 or 2")
    crit = cfg.critical_order()
    if s.m is not None and e != "kernel_decay" and s.family != "constant" and not _close(s.m, crit):
        formula = {"theorem11": "−(n/r)(1−ρ)", "bmo_corollary": "−(nl/2)(1−ρ)"}.get(e, "−(nl/r)(1−ρ)")
        raise ConfigError(f"m must equal {formula} for experiment {e} (expected {crit:g}, got {s.m:g})")
    if s.family not in ("dyadic_modulation", "oscillatory", "constant"):
        raise ConfigError(f"unknown symbol family {s.family!r}")
    if s.family == "oscillatory" and l != 1:
        raise ConfigError("oscillatory family is linear (l = 1)")
    if e in CUBE_EXPERIMENTS and g.N / g.L < 16:
        raise ConfigError(f"cubes of side 1 need at least 16 cells: N/L = {g.N / g.L:g} < 16")
    if e == "theorem15":
        p = cfg.exponents.p
        if len(p) != l:
            raise ConfigError(f"exponents.p needs {l} entries")
        if any(not (r < pj < math.inf) for pj in p):
            raise ConfigError(f"theorem15 needs r < p_j < ∞ (r = {r:g}, p = {p})")
        if len(cfg.weights) != l:
            raise ConfigError(f"weights needs {l} descriptors")
        for w, pj in zip(cfg.weights, p):
            if w.get("family") not in ("power", "constant"):
                raise ConfigError(f"unknown weight family {w.get('family')!r}")
            # clamped power weights rank A_p constants reliably only well inside |a| < n(p-1)
            limit = g.n * (pj - 1.0) / 2.0
            if w.get("family") == "power" and abs(float(w.get("a", 0.0))) > limit:
                raise ConfigError(f"power weight exponent |a| = {abs(float(w['a'])):g} exceeds n(p-1)/2 = {limit:g}")
    if e == "lebesgue_bounds":
        _validate_lebesgue(cfg)
    if e == "kernel_decay" and len(cfg.kernel.k) < 3:
        raise ConfigError("kernel_decay needs at least 3 values of k")
    if e == "kernel_decay" and cfg.kernel.decay is not None:
        low = g.n * l / r
        # heavier weights amplify wraparound of the periodized kernel
        if not low < cfg.kernel.decay <= low + 3:
            raise ConfigError(f"kernel.decay must lie in (nl/r, nl/r + 3] = ({low:g}, {low + 3:g}], "
                              f"got {cfg.kernel.decay:g}")
    sw = cfg.corpus.sweep
    if sw.kind not in ("modulation", "dilation"):
        raise ConfigError(f"unknown sweep kind {sw.kind!r}")
    if e != "kernel_decay" and len(sw.k) < 3:
        raise ConfigError("a sweep needs at least 3 levels")
    if cfg.corpus.size < 1:
        raise ConfigError("corpus.size must be positive")


def lebesgue_lambda_interval(rho: float, l: int, r: float):
    return ((2 * rho * l - r) / (2 * l - r), rho)


def _validate_lebesgue(cfg: ExperimentConfig) -> None:
    rho, l, r = cfg.symbol.rho, cfg.symbol.l, cfg.exponents.r
    lam = cfg.exponents.lam
    if rho < r / (2 * l):
        if lam is not None:
            raise ConfigError(f"ρ < r/(2l) = {r / (2 * l):g}: whole-operator mode takes no λ")
        return
    lo, hi = lebesgue_lambda_interval(rho, l, r)
    if lam is None or not (lo < lam < hi):
        raise ConfigError(f"ρ ≥ r/(2l) needs λ in the open interval ({lo:g}, {hi:g}), got {lam}")
