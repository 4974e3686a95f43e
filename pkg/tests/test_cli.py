import csv
import json
from pathlib import Path

import pytest

from magsense.cli import main
from magsense.dataset import HEADER


def run(*argv):
    return main([str(a) for a in argv])


def _files(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    for name in ("tensile_cal", "temp_cal", "noncontact", "bend_plasticity"):
        assert run("simulate", "--scenario", name, "--seed", 0, "--out", root / name) == 0
    return root


@pytest.fixture(scope="module")
def fatigue_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fatigue")
    assert run("simulate", "--scenario", "fatigue_monitor", "--out", out) == 0
    return out


def test_simulate_outputs(runs):
    rep = json.loads((runs / "tensile_cal" / "run_report.json").read_text())
    assert rep["scenario"] == "tensile_cal" and len(rep["config_hash"]) == 64
    for f in rep["outputs"]:
        assert (runs / "tensile_cal" / f).is_file()
    assert (runs / "tensile_cal" / "dataset.csv").read_text().split("\n")[0] == HEADER


def test_noncontact_series_shape(runs):
    with open(runs / "noncontact" / "series" / "fig5c.csv") as fh:
        rows = list(csv.DictReader(fh))
    pairs = {(float(r["temp_c"]), int(r["cycle"])) for r in rows}
    assert {t for t, _ in pairs} == {23.0, 30.0, 40.0}
    assert {c for _, c in pairs} == set(range(6))


@pytest.mark.parametrize("noise", [None, "zero"])
def test_deterministic(tmp_path, noise):
    args = ["simulate", "--scenario", "noncontact", "--seed", 5]
    if noise:
        cfg = tmp_path / "c.ini"
        cfg.write_text("[scenario]\nname = noncontact\n[noise]\ngaussian_sd = 0\nquant_step = 0\n")
        args = ["simulate", "--config", cfg, "--seed", 5]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a.keys() == b.keys() and a == b


def test_seed_changes_output(tmp_path):
    run("simulate", "--scenario", "temp_cal", "--seed", 1, "--out", tmp_path / "a")
    run("simulate", "--scenario", "temp_cal", "--seed", 2, "--out", tmp_path / "b")
    assert (tmp_path / "a" / "dataset.csv").read_bytes() != (tmp_path / "b" / "dataset.csv").read_bytes()


def test_report(runs, tmp_path):
    assert run("report", runs, "--out", tmp_path / "rep") == 0
    with open(tmp_path / "rep" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert sorted(r["name"] for r in rows) == ["noncontact_ci95", "strain_ci95", "temp_ci95"]
    assert all(r["pass"] == "true" for r in rows)
    assert "PASS" in (tmp_path / "rep" / "report.txt").read_text()
    assert {p.name for p in (tmp_path / "rep" / "plots").iterdir()} >= {"fig4a.csv", "fig4b.csv", "fig5c.csv",
                                                                        "fig5d.csv", "fig6a.csv"}
    assert run("report", runs, "--out", tmp_path / "rj", "--format", "json") == 0
    assert len(json.loads((tmp_path / "rj" / "summary.json").read_text())["targets"]) == 3


def test_report_empty_dir(tmp_path):
    assert run("report", tmp_path) == 1


def test_calibrate_and_monitor(runs, tmp_path):
    ds = runs / "tensile_cal" / "dataset.csv"
    assert run("calibrate", ds, "--channel", "strain", "--out", tmp_path, "--format", "json") == 0
    rep = json.loads((tmp_path / "fit_report_strain.json").read_text())
    assert rep["overlay_corrected"] < rep["overlay_uncorrected"]
    assert run("monitor", ds, "--model", tmp_path / "model_strain.ini", "--detector", "cusum", "--out", tmp_path) == 0
    assert (tmp_path / "monitor_streams.csv").is_file()


def test_calibrate_temp(runs, tmp_path):
    assert run("calibrate", runs / "temp_cal" / "dataset.csv", "--channel", "temp", "--out", tmp_path) == 0
    assert (tmp_path / "model_temp.ini").is_file() and (tmp_path / "fit_report_temp.csv").is_file()


def test_monitor_bend_onset(runs, tmp_path):
    assert run("monitor", runs / "bend_plasticity" / "dataset.csv", "--out", tmp_path, "--format", "json") == 0
    summary = json.loads((tmp_path / "monitor_summary.json").read_text())
    assert summary["detector"] == "onset" and summary["onset_stress"] > 0


def test_model_mismatch_exit_4(runs, tmp_path):
    run("calibrate", runs / "tensile_cal" / "dataset.csv", "--channel", "strain", "--out", tmp_path)
    code = run("monitor", runs / "noncontact" / "dataset.csv", "--model", tmp_path / "model_strain.ini",
               "--out", tmp_path / "m")
    assert code == 4


def test_schema_error_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(HEADER.replace(",l_temp_ch_h", "") + "\n0,0,0,,,,,1e-5\n")
    assert run("calibrate", bad, "--channel", "temp", "--out", tmp_path) == 3
    assert "l_temp_ch_h" in capsys.readouterr().err


def test_fit_failure_exit_2(tmp_path):
    p = tmp_path / "few.csv"
    p.write_text(HEADER + "\n0,0,0,,,,25,,3.1e-5\n1,0,0,,,,26,,3.2e-5\n")
    assert run("calibrate", p, "--channel", "temp", "--out", tmp_path) == 2


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["simulate", "--out", "x"],
    ["simulate", "--scenario", "nowhere", "--out", "x"],
    ["calibrate", "missing.csv", "--channel", "strain", "--out", "x"],
])
def test_usage_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(*argv) == 1


def test_bad_config_exit_1(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[noise]\nunknown_key = 1\n")
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 1


def test_fatigue_run(fatigue_run, tmp_path):
    hist = sorted((fatigue_run / "history").glob("coupon_*.csv"))
    assert len(hist) == 100
    with open(fatigue_run / "fatigue_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 100
    code = run("monitor", fatigue_run / "dataset.csv", "--failures", fatigue_run / "fatigue_summary.csv",
               "--out", tmp_path, "--format", "json")
    assert code == 0
    summary = json.loads((tmp_path / "monitor_summary.json").read_text())
    assert summary["detector"] == "cusum" and summary["n_streams"] == 100
    with open(tmp_path / "monitor_blocks.csv") as fh:
        blocks = {int(r["block_id"]): r for r in csv.DictReader(fh)}
    for r in rows:
        assert blocks[int(r["block_id"])]["detection_cycle"] == r["detection_cycle"]
