"""Acceptance criteria 1 to 10, each run at its stated tolerance.

Every test records one ``CRITERION n: PASS|FAIL`` line, and the terminal
summary lists them in order.
"""

import itertools
import json
import time

import numpy as np
import pytest

import oracles
from conftest import record_criterion
from maxharm import cli
from maxharm.config import config_from_dict
from maxharm.grid import GridFunction, GridSpec, test_function
from maxharm.littlewood_paley import build_partition, partition_check
from maxharm.maximal import (CubeFamily, dyadic_maximal, hl_maximal, multisublinear_maximal,
                             sharp_maximal_homogeneous, sharp_maximal_inhomogeneous)
from maxharm.operators import apply_linear
from maxharm.symbols import (SymbolClassParams, band_limit, dilate_symbol, dilated_params,
                             dyadic_modulation_symbol, estimate_seminorms, lp_pieces)
from maxharm.verification import declared_params, run_experiment

PAIRS = list(itertools.product([0.25, 0.5, 0.75], [1.5, 2.0]))


def bundled(name, **over):
    data = json.loads(cli.bundled_config_path(name).read_text())
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(data.get(key), dict):
            data[key] = dict(data[key], **val)
        else:
            data[key] = val
    return data


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def fit_summary(rep):
    return ", ".join(f"{f.label} slope {f.slope:+.3f} band {f.band:.3f}" for f in rep.fits[:2])


# 1 ------------------------------------------------------------------------------

def test_criterion_01_littlewood_paley_identity():
    def work():
        spec = GridSpec(1, 4.0, 1024)
        part = build_partition(spec)
        dev = partition_check(part).max_deviation
        recon = 0.0
        for seed, rho in ((0, 0.25), (1, 0.5), (2, 0.75)):
            params = SymbolClassParams(-0.5 * (1 - rho), rho, rho)
            sigma = band_limit(dyadic_modulation_symbol(params, 5, seed=seed, spec=spec), part)
            total = sum(q.table(spec) for q in lp_pieces(sigma, part))
            recon = max(recon, float(np.max(np.abs(total - sigma.table(spec)))))
        return dev, recon

    (dev, recon), secs = timed(work)
    ok = dev <= 1e-12 and recon <= 1e-10 and secs < 1.0
    record_criterion(1, ok, f"partition {dev:.1e} <= 1e-12, reconstruction {recon:.1e} <= 1e-10, {secs:.2f}s < 1s")
    assert ok


# 2 ------------------------------------------------------------------------------

def test_criterion_02_maximal_oracles():
    spec = GridSpec(1, 8.0, 64)
    full = CubeFamily.full(spec, max_side=spec.N)
    dyad = CubeFamily.dyadic(spec, max_side=spec.N)
    rng = np.random.default_rng(2)
    f = GridFunction(spec, rng.standard_normal(spec.N))
    g = GridFunction(spec, test_function(spec, "modulated", x0=0.3, check=False).samples.real)

    def work():
        errs = {}
        for r in (0.5, 1.0, 2.0):
            errs[f"hl r={r}"] = np.max(np.abs(hl_maximal(f, r, full).samples - oracles.hl(f, r, full)))
            errs[f"multi r={r}"] = np.max(np.abs(multisublinear_maximal([f, g], r, full).samples
                                                 - oracles.multisublinear([f, g], r, full)))
            for h, tag in ((f, "noise"), (g, "modulated")):
                errs[f"sharp_inhom r={r} {tag}"] = np.max(np.abs(
                    sharp_maximal_inhomogeneous(h, r, full).samples - oracles.sharp_inhomogeneous(h, r, full)))
        errs["dyadic"] = np.max(np.abs(dyadic_maximal(f, dyad).samples - oracles.hl(f, 1.0, dyad)))
        for h, tag in ((f, "noise"), (g, "modulated")):
            errs[f"sharp_hom {tag}"] = np.max(np.abs(sharp_maximal_homogeneous(h, full).samples
                                                     - oracles.sharp_homogeneous(h, full)))
        return errs

    errs, secs = timed(work)
    worst = max(errs, key=errs.get)
    ok = errs[worst] <= 1e-9 and secs < 60
    record_criterion(2, ok, f"worst {worst} {errs[worst]:.1e} <= 1e-9 over {len(errs)} comparisons, {secs:.1f}s < 60s")
    assert ok


# 3 ------------------------------------------------------------------------------

@pytest.mark.parametrize("rho,r", PAIRS)
def test_criterion_03_kernel_decay(rho, r):
    cfg = config_from_dict(bundled("kernel_decay", symbol={"rho": rho}, exponents={"r": r}))
    rep, secs = timed(lambda: run_experiment(cfg))
    worst = max(rep.fits, key=lambda f: f.slope - f.limit)
    ok = rep.verdict and secs < 120
    record_criterion(3, ok, f"rho={rho} r={r}: worst {worst.label} slope {worst.slope:.3f} "
                            f"<= {worst.limit:.3f}, {secs:.1f}s < 120s")
    assert ok


# 4 ------------------------------------------------------------------------------

@pytest.mark.parametrize("rho,r", PAIRS)
def test_criterion_04_linear_sharp_bound(rho, r):
    data = bundled("theorem11", symbol={"rho": rho}, exponents={"r": r})
    data.pop("probe_offset")
    cfg = config_from_dict(data)
    assert cfg.corpus.size == 24 and cfg.corpus.sweep.k == [0, 1, 2, 3, 4, 5]
    assert declared_params(cfg).m == pytest.approx(-(1 / r) * (1 - rho))
    rep, secs = timed(lambda: run_experiment(cfg))
    ok = rep.verdict and secs < 300
    record_criterion(4, ok, f"rho={rho} r={r}: {fit_summary(rep)}, sup ratio {rep.sup_ratio:.3g}, {secs:.1f}s < 300s")
    assert ok


# 5 ------------------------------------------------------------------------------

@pytest.mark.parametrize("rho,r", PAIRS)
def test_criterion_05_bilinear_sharp_bound(rho, r):
    # dilations 2^(k/3), k = 0..6, span the same range as the bundled sweep while fitting N = 256
    data = bundled("theorem14", grid={"N": 256}, symbol={"rho": rho}, exponents={"r": r})
    data["corpus"]["sweep"] = {"kind": "dilation", "base": 1.0, "step": 1 / 3, "k": list(range(7))}
    cfg = config_from_dict(data)
    assert declared_params(cfg).m == pytest.approx(-(2 / r) * (1 - rho))
    rep, secs = timed(lambda: run_experiment(cfg))
    ok = rep.verdict and secs < 600
    record_criterion(5, ok, f"rho={rho} r={r}: {fit_summary(rep)}, sup ratio {rep.sup_ratio:.3g}, {secs:.1f}s < 600s")
    assert ok


# 6 ------------------------------------------------------------------------------

def test_criterion_06_bmo_bound():
    cfg = config_from_dict(bundled("bmo_corollary"))
    assert declared_params(cfg).m == pytest.approx(-(2 / 2) * 0.5)
    rep, secs = timed(lambda: run_experiment(cfg))
    ok = rep.verdict and secs < 300
    record_criterion(6, ok, f"{fit_summary(rep)}, sup ratio {rep.sup_ratio:.3g}, {secs:.1f}s < 300s")
    assert ok


# 7 ------------------------------------------------------------------------------

def test_criterion_07_weighted_bounds():
    cfg = config_from_dict(bundled("theorem15"))
    rep, secs = timed(lambda: run_experiment(cfg))
    c = rep.checks
    ok = (rep.verdict and secs < 600
          and c["tuple_constant"].value <= 10
          and c["refinement_operator"].value <= 0.2 and c["refinement_maximal"].value <= 0.2
          and c["power_embedding"].passed)
    record_criterion(7, ok, f"tuple constant {c['tuple_constant'].value:.3f} <= 10, refinement operator "
                            f"{c['refinement_operator'].value:.2g} maximal {c['refinement_maximal'].value:.2g} "
                            f"<= 0.2, embedding {c['power_embedding'].value:.1e}, {secs:.1f}s < 600s")
    assert ok


# 8 ------------------------------------------------------------------------------

@pytest.mark.parametrize("l", [2, 3])
def test_criterion_08_trace(l):
    cfg = config_from_dict(bundled("trace", trace={"l": l, "s": 0.5, "corpus_size": 50}))
    rep, secs = timed(lambda: run_experiment(cfg))
    c = rep.checks
    ok = (rep.verdict and secs < 120 and c["sweep_spread"].value <= 10
          and c["collapse_identity"].value <= 1e-12)
    record_criterion(8, ok, f"l={l}: spread {c['sweep_spread'].value:.3f} <= 10, {fit_summary(rep)}, "
                            f"collapse {c['collapse_identity'].value:.1e} <= 1e-12, {secs:.1f}s < 120s")
    assert ok


# 9 ------------------------------------------------------------------------------

def test_criterion_09_dilation_machinery():
    spec = GridSpec(1, 4.0, 1024)
    rho = 0.5

    def work():
        part = build_partition(spec)
        params = SymbolClassParams(-0.25, rho, rho)
        sigma = dyadic_modulation_symbol(params, 5, seed=3, spec=spec)
        pieces = lp_pieces(band_limit(sigma, part), part)
        f = test_function(spec, "modulated", x0=0.1)
        identity = 0.0
        recert = []
        for k, lam in ((2, 0.25), (3, 0.5), (4, 0.125), (2, 0.5)):
            s = 2.0 ** (lam * k)
            tau = dilate_symbol(pieces[k], lam, k, spec=spec)
            g = GridFunction(spec.dilated(s), f.samples)
            diff = apply_linear(pieces[k], f).samples - apply_linear(tau, g).samples
            identity = max(identity, float(np.max(np.abs(diff))))
            rep = estimate_seminorms(tau, dilated_params(params, lam), spec.dilated(s ** 0.5),
                                     max_order=2, x_stride=4)
            recert.append(rep.passed)
        return identity, recert

    (identity, recert), secs = timed(work)
    ok = identity <= 1e-8 and all(recert) and secs < 60
    record_criterion(9, ok, f"identity {identity:.1e} <= 1e-8, recertified {sum(recert)}/{len(recert)} "
                            f"at order 2, {secs:.1f}s < 60s")
    assert ok


# 10 -----------------------------------------------------------------------------

SMALL_CORPUS = {"profiles": ["gaussian", "modulated"], "dilations": [1.0, 1.5],
                "translations": [0.0, 0.25], "size": 4,
                "sweep": {"kind": "dilation", "k": [0, 1, 2], "base": 1.0, "step": 0.5}}
SMALL_GRID = {"L": 4.0, "N": 128}

DETERMINISM_CONFIGS = {
    "theorem11": {"experiment": "theorem11", "grid": SMALL_GRID, "corpus": SMALL_CORPUS,
                  "symbol": {"rho": 0.5}, "exponents": {"r": 1.5}},
    "theorem14": {"experiment": "theorem14", "grid": SMALL_GRID, "corpus": SMALL_CORPUS,
                  "symbol": {"rho": 0.5, "l": 2}, "exponents": {"r": 2.0}},
    "bmo_corollary": {"experiment": "bmo_corollary", "grid": SMALL_GRID, "corpus": SMALL_CORPUS,
                      "symbol": {"rho": 0.5, "l": 2}},
    "theorem15": {"experiment": "theorem15", "grid": SMALL_GRID, "corpus": SMALL_CORPUS,
                  "symbol": {"rho": 0.5, "l": 2}, "exponents": {"r": 2.0, "p": [4.0, 4.0]},
                  "weights": [{"family": "power", "a": 0.25}, {"family": "power", "a": -0.25}]},
    "lebesgue_bounds": {"experiment": "lebesgue_bounds", "grid": SMALL_GRID,
                        "symbol": {"rho": 0.75, "l": 2}, "exponents": {"r": 2.0, "lam": 0.6},
                        "corpus": dict(SMALL_CORPUS, sweep={"kind": "dilation", "k": [1, 2, 3],
                                                            "base": 1.0, "step": 0.25})},
    "kernel_decay": {"experiment": "kernel_decay", "grid": {"L": 4.0, "N": 1024},
                     "symbol": {"rho": 0.5}, "exponents": {"r": 2.0}, "kernel": {"k": [1, 2, 3, 4]}},
    "trace": {"experiment": "trace", "grid": {"L": 24.0, "N": 256},
              "trace": {"l": 2, "s": 0.5, "corpus_size": 8}},
}


def test_criterion_10_determinism(tmp_path):
    mismatched = []
    for name, data in DETERMINISM_CONFIGS.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(data))
        outputs = []
        for threads in (1, 4, 8):
            out = tmp_path / f"{name}-{threads}"
            code = cli.main(["run", str(path), "--out", str(out), "--seed", "7", "--threads", str(threads)])
            assert code in (0, 2), f"{name} exited {code}"
            outputs.append(tuple((out / f).read_bytes() for f in ("report.json", "ratios.csv", "slopes.csv")))
        if len(set(outputs)) != 1:
            mismatched.append(name)
    ok = not mismatched
    record_criterion(10, ok, f"{len(DETERMINISM_CONFIGS)} experiments x threads (1, 4, 8): "
                             f"{'all outputs byte-identical' if ok else 'differ: ' + ', '.join(mismatched)}")
    assert ok
