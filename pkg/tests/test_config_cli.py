"""Config parsing, validation and the command line interface."""

import csv
import json
import re

import pytest

from maxharm import __version__
from maxharm.cli import (CASE_COLUMNS, SLOPE_COLUMNS, bundled_config_path, list_experiments, main,
                         resolve_threads)
from maxharm.config import EXPERIMENTS, ConfigError, config_from_dict, lebesgue_lambda_interval, parse_config

IDS = {"theorem11", "theorem14", "bmo_corollary", "theorem15", "lebesgue_bounds", "kernel_decay", "trace"}

FAST = {
    "experiment": "theorem11", "schema_version": 1, "grid": {"L": 4.0, "N": 128},
    "symbol": {"rho": 0.5}, "exponents": {"r": 2.0},
    "corpus": {"profiles": ["modulated"], "dilations": [1.0], "translations": [0.0, 0.25], "size": 2,
               "sweep": {"kind": "dilation", "k": [0, 1, 2], "base": 1.0, "step": 0.5}},
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return p


def test_minimal_config_fills_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, {"experiment": "theorem11"}))
    assert (cfg.grid.N, cfg.grid.L, cfg.corpus.size) == (512, 32.0, 24)
    assert cfg.critical_order() == pytest.approx(-0.25)


@pytest.mark.parametrize("symbol,message", [
    ({"rho": 1.0}, "ρ ∈ (0,1) required"),
    ({"rho": 0.0}, "ρ ∈ (0,1) required"),
    ({"rho": 0.5, "delta": 0.75}, "δ"),
])
def test_symbol_range_errors(symbol, message):
    with pytest.raises(ConfigError, match=re.escape(message)):
        config_from_dict({"experiment": "theorem11", "symbol": symbol})


def test_wrong_order_names_expected_value():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"experiment": "theorem14", "symbol": {"rho": 0.5, "l": 2, "m": -1.0},
                          "exponents": {"r": 2.0}, "grid": {"L": 4.0, "N": 256}})
    msg = str(exc.value)
    assert "m must equal −(nl/r)(1−ρ) for experiment theorem14" in msg and "expected -0.5" in msg


def test_r_range():
    with pytest.raises(ConfigError, match=r"r ∈ \(1,2\] required"):
        config_from_dict({"experiment": "theorem11", "exponents": {"r": 2.5}})


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key.*'colour'.*grid"):
        config_from_dict({"experiment": "theorem11", "grid": {"colour": 1}})
    with pytest.raises(ConfigError, match="unknown key"):
        config_from_dict({"experiment": "theorem11", "extra": True})


def test_parse_error_reports_position(tmp_path):
    with pytest.raises(ConfigError, match="line 3, column"):
        parse_config(write(tmp_path, '{\n  "experiment": "theorem11",\n  oops\n}'))


def test_schema_version_checked():
    with pytest.raises(ConfigError, match="schema_version"):
        config_from_dict({"experiment": "theorem11", "schema_version": 2})


def test_lebesgue_lambda_interval_in_error():
    assert lebesgue_lambda_interval(0.75, 2, 2.0) == (0.5, 0.75)
    with pytest.raises(ConfigError, match=r"\(0, 0.5\)"):
        config_from_dict({"experiment": "lebesgue_bounds", "symbol": {"rho": 0.5, "l": 2},
                          "exponents": {"r": 2.0, "lam": 0.9}, "grid": {"L": 4.0, "N": 256}})


def test_infeasible_grid_rejected():
    with pytest.raises(ConfigError, match="16 cells"):
        config_from_dict({"experiment": "theorem11", "grid": {"L": 32.0, "N": 256}})
    with pytest.raises(ConfigError, match="Nyquist"):
        config_from_dict(dict(FAST, corpus=dict(FAST["corpus"], sweep={"kind": "modulation", "k": [0, 4, 8]})))


def test_weighted_exponent_guard():
    with pytest.raises(ConfigError, match="r < p_j"):
        config_from_dict({"experiment": "theorem15", "symbol": {"rho": 0.5, "l": 2},
                          "exponents": {"r": 2.0, "p": [2.0, 4.0]}, "grid": {"L": 4.0, "N": 256},
                          "weights": [{"family": "power", "a": 0.1}] * 2})


@pytest.mark.parametrize("a,ok", [(1.5, True), (-1.5, True), (1.6, False)])
def test_power_weight_stays_inside_half_admissible_range(a, ok):
    data = {"experiment": "theorem15", "symbol": {"rho": 0.5, "l": 2},
            "exponents": {"r": 2.0, "p": [4.0, 4.0]},
            "weights": [{"family": "power", "a": a}, {"family": "constant", "c": 1.0}]}
    if ok:
        config_from_dict(data)
    else:
        with pytest.raises(ConfigError, match=r"n\(p-1\)/2 = 1.5"):
            config_from_dict(data)


@pytest.mark.parametrize("decay,ok", [(0.5, False), (0.6, True), (3.5, True), (3.6, False)])
def test_kernel_decay_order_range(decay, ok):
    data = {"experiment": "kernel_decay", "symbol": {"rho": 0.5}, "exponents": {"r": 2.0},
            "grid": {"L": 4.0, "N": 4096}, "kernel": {"decay": decay}}
    if ok:
        assert config_from_dict(data).kernel.decay == decay
    else:
        with pytest.raises(ConfigError, match="kernel.decay"):
            config_from_dict(data)


def test_trace_memory_guard():
    with pytest.raises(ConfigError, match="memory"):
        config_from_dict({"experiment": "trace", "trace": {"l": 4}})


def test_list_catalog(capsys):
    text = list_experiments()
    assert {line.split(":")[0] for line in text.splitlines() if not line.startswith(" ")} == IDS
    assert text == list_experiments()
    assert main(["list"]) == 0
    assert capsys.readouterr().out.strip() == text
    assert set(EXPERIMENTS) == IDS


@pytest.mark.parametrize("experiment", sorted(IDS))
def test_bundled_configs_round_trip(experiment):
    path = bundled_config_path(experiment)
    cfg = parse_config(path)
    assert cfg.experiment == experiment
    assert config_from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    assert main(["validate", str(path)]) == 0


def test_dry_run_writes_nothing(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, FAST)), "--out", str(out), "--dry-run"]) == 0
    assert not out.exists()


def test_unknown_experiment_exit_one_without_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, {"experiment": "unknown"})), "--out", str(out)]) == 1
    assert not out.exists()


def test_missing_file_exit_one(tmp_path):
    assert main(["validate", str(tmp_path / "absent.json")]) == 1


def test_run_writes_three_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, FAST)), "--out", str(out), "--seed", "5"]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["seed"] == 5 and doc["version"] == __version__ and doc["verdict"] is True
    assert doc["config"]["grid"] == {"n": 1, "L": 4.0, "N": 128}
    with open(out / "ratios.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CASE_COLUMNS and len(rows) == 1 + 2 * 3
    with open(out / "slopes.csv") as fh:
        assert tuple(next(csv.reader(fh))) == SLOPE_COLUMNS


def test_verdict_failure_exit_two(tmp_path):
    data = dict(FAST, tolerances={"slope": -5.0})
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, data)), "--out", str(out)]) == 2
    assert json.loads((out / "report.json").read_text())["verdict"] is False


def test_budget_exceeded_exit_three(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, FAST)), "--out", str(out), "--budget", "0"]) == 3
    doc = json.loads((out / "report.json").read_text())
    assert doc["partial"] is True and doc["verdict"] is False


def test_thread_resolution(monkeypatch):
    monkeypatch.setenv("MAXHARM_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    assert resolve_threads(0) >= 1
    monkeypatch.delenv("MAXHARM_THREADS")
    assert resolve_threads(None) == 1
    with pytest.raises(ValueError):
        resolve_threads(-1)


def test_console_script_entry_point():
    from importlib.metadata import entry_points

    eps = {ep.name: ep.value for ep in entry_points(group="console_scripts")}
    assert eps.get("maxharm") == "maxharm.cli:main"
