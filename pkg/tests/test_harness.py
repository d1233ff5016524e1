import csv
import json
import math

import numpy as np
import pytest

from oukraichnan import cli, harness
from oukraichnan.harness import ConfigError, Rule, Schedule, SweepConfig, SweepReport
from oukraichnan.spectra import SpectrumParams

TINY = {
    "spectrum": {"ell0": 5.0, "kappa": 0.1, "kappa0": 0.1},
    "schedule": {"condition": "T1_fixed_cutoff", "epsilons": [0.4, 0.2],
                 "ell1_rule": {"kind": "constant", "coefficient": 0.25}},
    "transport": {"replicas": 16, "chunk": 8, "shells": 4, "dirs_per_shell": 2, "horizon": 0.2,
                  "n_records": 4, "oracle_samples": 200, "oracle_dt": 0.05},
}


def write_toml(path, text):
    path.write_text(text)
    return path


TINY_TOML = """
[spectrum]
ell0 = 5.0
kappa = 0.1
kappa0 = 0.1

[schedule]
condition = "T1_fixed_cutoff"
epsilons = [0.4, 0.2]
ell1_rule = { kind = "constant", coefficient = 0.25 }

[transport]
replicas = 16
chunk = 8
shells = 4
dirs_per_shell = 2
horizon = 0.2
n_records = 4
oracle_samples = 200
oracle_dt = 0.05
"""


@pytest.fixture(scope="module")
def tiny_report():
    return harness.run_sweep(harness.config_from_dict(TINY), seed=7, workers=1)


def test_rules():
    assert Rule("power", 2.0, 0.5)(0.25) == pytest.approx(1.0)
    assert Rule("constant", 3.0, 9.0)(0.1) == 3.0
    assert Rule("power", 1.0, 0.0).is_constant
    with pytest.raises(ConfigError):
        Rule("log")


def test_schedule_checks():
    with pytest.raises(ConfigError):
        Schedule("T1_fixed_cutoff", (0.1, 0.2))
    with pytest.raises(ConfigError):
        Schedule("vii", (0.2, 0.1))
    with pytest.raises(ConfigError):
        Schedule("i", (0.2, 0.0))


def test_default_schedule_is_valid():
    cfg = SweepConfig()
    verdict = harness.validate_schedule(cfg.spectrum, cfg.schedule)
    assert verdict.valid
    assert verdict.describe() == "valid under T1_fixed_cutoff"


def test_violation_is_described():
    p = SpectrumParams(alpha=1.5, beta=0.5)
    s = Schedule("v", (0.4, 0.1, 0.02, 0.005), Rule("power", 1.0, 2.0))
    verdict = harness.validate_schedule(p, s)
    assert not verdict.valid
    assert verdict.describe().startswith("violated(v): ")


def test_regime_mismatch_is_a_violation():
    p = SpectrumParams(alpha=1.5, beta=0.5)
    s = Schedule("i", (0.4, 0.1, 0.02, 0.005), Rule("power", 1.0, 1.0))
    assert not harness.validate_schedule(p, s).valid


@pytest.mark.parametrize(
    "raw",
    [
        {"spectra": {}},
        {"spectrum": {"alpha": 3.0}},
        {"spectrum": {"colour": 1}},
        {"schedule": {"epsilons": [0.1, 0.2]}},
        {"transport": {"replicas": 0}},
        {"observables": {"theta": {"kind": "gaussian_blob", "center": [0, 0], "width": 1.0}}},
        {"observables": {"T0": {"kind": "ring"}}},
        {"observables": {"rho": {}}},
    ],
)
def test_config_errors(raw):
    with pytest.raises(ConfigError):
        harness.config_from_dict(raw)


def test_load_config_round_trip(tmp_path):
    cfg = harness.load_config(write_toml(tmp_path / "c.toml", TINY_TOML))
    assert cfg == harness.config_from_dict(TINY)
    assert cfg.schedule.ell1(0.2) == 0.25
    with pytest.raises(ConfigError):
        harness.load_config(write_toml(tmp_path / "bad.toml", "[spectrum\n"))


def test_worker_count(monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "3")
    assert harness.worker_count() == 3
    monkeypatch.delenv(harness.WORKERS_ENV)
    assert harness.worker_count(2) == 2


def test_invalid_schedule_refused_unless_overridden():
    raw = dict(TINY, schedule={"condition": "T1_fixed_cutoff", "epsilons": [0.4, 0.2],
                               "ell1_rule": {"kind": "power", "coefficient": 1.0, "exponent": 1.0}})
    cfg = harness.config_from_dict(raw)
    with pytest.raises(harness.ScheduleViolation) as info:
        harness.run_sweep(cfg, seed=1, with_oracle=False)
    assert not info.value.verdict.valid


def test_empty_report_gives_header_only_csv(tmp_path):
    paths = harness.report_emit(SweepReport(), tmp_path)
    text = (tmp_path / "sweep.csv").read_text()
    assert text.splitlines() == [harness._CSV_HEADER.strip()]
    assert json.loads((tmp_path / "sweep.json").read_text())["rows"] == []
    assert len(paths) == 2


def test_tiny_sweep_report(tiny_report, tmp_path):
    rep = tiny_report
    assert [r["epsilon"] for r in rep.rows] == [0.4, 0.2]
    assert all("error" not in r for r in rep.rows)
    assert set(harness.OBSERVABLES) <= set(rep.oracle)
    assert rep.diagnostics["max_principle_violations"] == 0
    harness.report_emit(rep, tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 2 * len(harness.OBSERVABLES)
    for row in rows:
        gap = abs(float(row["estimate"]) - float(row["oracle"]))
        assert float(row["gap"]) == pytest.approx(gap)
    gaps = list(csv.DictReader(open(tmp_path / "sweep_gap_dispersion_slope.csv")))
    assert [float(g["log10_epsilon"]) for g in gaps] == pytest.approx([math.log10(0.4), math.log10(0.2)])


def test_report_json_round_trip(tiny_report):
    back = SweepReport.from_json(tiny_report.to_json())
    assert back.to_json() == tiny_report.to_json()
    assert "wall" not in tiny_report.to_json()


def test_zero_amplitude_sweep_matches_brownian_slope():
    raw = json.loads(json.dumps(TINY))
    raw["spectrum"]["e0"] = 0.0
    raw["transport"]["replicas"] = 64
    raw["transport"]["chunk"] = 32
    rep = harness.run_sweep(harness.config_from_dict(raw), seed=3, workers=1)
    assert rep.oracle["dispersion_slope"][0] == pytest.approx(2 * 0.1)
    for r in rep.rows:
        est, se = r["dispersion_slope"]
        assert est == pytest.approx(2 * 0.1, abs=5 * se)


def test_cli_exit_codes(tmp_path, capsys):
    cfg = write_toml(tmp_path / "c.toml", TINY_TOML)
    assert cli.main(["validate", "--config", str(cfg)]) == 0
    bad_sched = write_toml(
        tmp_path / "v.toml",
        TINY_TOML.replace('{ kind = "constant", coefficient = 0.25 }',
                          '{ kind = "power", coefficient = 1.0, exponent = 1.0 }'),
    )
    assert cli.main(["validate", "--config", str(bad_sched)]) == 3
    assert cli.main(["sweep", "--config", str(bad_sched), "--seed", "1", "--out-dir", str(tmp_path)]) == 3
    assert cli.main(["validate", "--config", str(write_toml(tmp_path / "b.toml", "[spectrum]\nalpha = 5\n"))]) == 2
    assert cli.main(["validate", "--config", str(tmp_path / "missing.toml")]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["sweep"])
    assert info.value.code == 2


def test_cli_synth_and_report(tmp_path, tiny_report, capsys):
    cfg = write_toml(tmp_path / "c.toml", TINY_TOML)
    out = tmp_path / "f.ouf"
    assert cli.main(["synth", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["roundtrip"] is True
    harness.report_emit(tiny_report, tmp_path / "a")
    assert cli.main(["report", str(tmp_path / "a" / "sweep.json"), "--out-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_cli_simulate_and_oracle(tmp_path, capsys):
    cfg = write_toml(tmp_path / "c.toml", TINY_TOML)
    grid_csv = tmp_path / "grid.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--seed", "2", "--samples", "2",
                     "--spacing", "0.5", "--out", str(grid_csv)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 0.0 <= res["min_estimate"] <= res["max_estimate"] <= 1.0
    assert next(csv.reader(open(grid_csv))) == ["x1", "x2", "estimate", "stderr"]
    assert cli.main(["oracle", "--config", str(cfg), "--out", str(tmp_path / "pair.csv")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["dispersion_slope"] > 0
    assert np.isfinite(res["weak_mean"])
