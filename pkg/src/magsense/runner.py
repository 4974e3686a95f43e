"""
Scenario runs on disk: simulate, analyze, and write datasets, models, plot
series and a JSON run report into one output directory.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from . import calibration as cal
from . import scenarios as S
from .config import config_hash, config_to_text
from .dataset import Dataset, fmt, write_csv

REPORT_NAME = "run_report.json"
SERIES_DIR = "series"

# scenario -> (targets key, metrics key)
TARGETS = {
    "tensile_cal": ("strain_ci95", "ci95_strain"),
    "temp_cal": ("temp_ci95", "ci95_temp"),
    "noncontact": ("noncontact_ci95", "ci95_strain"),
}


def write_table(path: "os.PathLike[str] | str", header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    """CSV with full-precision floats, empty cells for NaN/None, LF endings."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if v != v else v
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def dump_json(obj: Any, path: "os.PathLike[str] | str") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(_jsonable(obj), handle, indent=2, sort_keys=True)
        handle.write("\n")


def judge(cfg: S.Config, metrics: dict[str, Any]) -> list[dict[str, Any]]:
    """Compare the scenario's headline metric with its declared target."""
    name = cfg["scenario"]["name"]
    if name not in TARGETS:
        return []
    key, metric = TARGETS[name]
    target = cfg["targets"][key]
    tol = cfg["targets"]["rel_tol"]
    achieved = metrics[metric]
    return [{
        "name": key,
        "target": target,
        "achieved": achieved,
        "rel_tol": tol,
        "pass": bool(abs(achieved - target) <= tol * target),
    }]


def _within_block_cycle(ds: Dataset) -> np.ndarray:
    """Cycle index counted from zero inside each block."""
    out = np.empty(len(ds), dtype=np.int64)
    for b in np.unique(ds.block_id):
        sel = ds.block_id == b
        out[sel] = ds.cycle_id[sel] - ds.cycle_id[sel].min()
    return out


def _strain_series(path: Path, res: dict[str, Any], key: str) -> None:
    rows = res["rows"]
    cyc = _within_block_cycle(rows)
    write_table(path, ("temp_c", "cycle", "ref_strain", "estimate"),
                zip(rows.ref_temp_c, cyc, rows.ref_strain, res[key]))


def _run_strain(cfg: S.Config, out: Path, ds: Dataset, temp_model=None) -> tuple[dict, list[str]]:
    res = S.analyze_strain(cfg, ds, temp_model)
    cal.save_model(res["model"], out / "model_strain.ini", res["report"])
    loads = res["rows"]
    temps = np.unique(loads.ref_temp_c)
    d_alpha = cfg["materials.galfenol"]["cte"] - cfg["coupon"]["cte"]
    metrics = {
        "ci95_strain": res["ci95_strain"],
        "rmse_strain": res["report"].rmse,
        "strain_range": res["strain_range"],
        "overlay_uncorrected": res["overlay_uncorrected"],
        "overlay_corrected": res["overlay_corrected"],
        "overlay_expected": abs(d_alpha * (temps.max() - temps.min())),
        "fit_iterations": res["report"].iterations,
    }
    return metrics, [res, "model_strain.ini"]


def run_scenario(cfg: S.Config, out_dir: "os.PathLike[str] | str") -> dict[str, Any]:
    """Execute one scenario end to end and return its run report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = out / SERIES_DIR
    series.mkdir(exist_ok=True)
    name = cfg["scenario"]["name"]
    files = ["config.ini"]
    with open(out / "config.ini", "w", encoding="utf-8", newline="\n") as handle:
        handle.write(config_to_text(cfg))

    metrics: dict[str, Any]
    if name == "tensile_cal":
        ds = S.simulate_tensile_cal(cfg)
        write_csv(ds, out / "dataset.csv")
        metrics, (res, model_file) = _run_strain(cfg, out, ds)
        _strain_series(series / "fig4a.csv", res, "eps_hat")
        files += ["dataset.csv", model_file, f"{SERIES_DIR}/fig4a.csv"]

    elif name == "temp_cal":
        ds = S.simulate_temp_cal(cfg)
        write_csv(ds, out / "dataset.csv")
        res = S.analyze_temp(cfg, ds)
        cal.save_model(res["model"], out / "model_temp.ini", res["report"])
        rows = res["rows"]
        write_table(series / "fig4b.csv", ("cycle", "ref_temp_c", "estimate"),
                    zip(rows.cycle_id, rows.ref_temp_c, res["t_hat"]))
        metrics = {"ci95_temp": res["ci95_temp"], "rmse_temp": res["report"].rmse, "temp_range": res["temp_range"]}
        files += ["dataset.csv", "model_temp.ini", f"{SERIES_DIR}/fig4b.csv"]

    elif name == "noncontact":
        ds = S.simulate_noncontact(cfg)
        write_csv(ds, out / "dataset.csv")
        tres = S.analyze_temp(cfg, ds)
        cal.save_model(tres["model"], out / "model_temp.ini", tres["report"])
        metrics, (res, model_file) = _run_strain(cfg, out, ds, tres["model"])
        metrics.update(ci95_temp=tres["ci95_temp"], sensitivity_ratio=S.sensitivity_ratio(cfg))
        _strain_series(series / "fig5c.csv", res, "eps_apparent")
        _strain_series(series / "fig5d.csv", res, "eps_hat")
        files += ["dataset.csv", "model_temp.ini", model_file, f"{SERIES_DIR}/fig5c.csv", f"{SERIES_DIR}/fig5d.csv"]

    elif name == "bend_plasticity":
        ds = S.simulate_bend_plasticity(cfg)
        write_csv(ds, out / "dataset.csv")
        res = S.analyze_bend(cfg, ds)
        tr = res["trace"]
        write_table(series / "fig6a.csv", ("increment", "branch", "ref_stress_pa", "inductance_h"),
                    zip(tr.increment, tr.branch, tr.sigma, tr.l))
        oracle = S.onset_oracle(cfg)
        onset = res["onset_stress"]
        metrics = {
            "onset_stress": onset,
            "onset_oracle": oracle,
            "onset_rel_err": None if onset is None or oracle is None else abs(onset - oracle) / oracle,
            "yield_stress": cfg["coupon"]["sigma_y"],
        }
        files += ["dataset.csv", f"{SERIES_DIR}/fig6a.csv"]

    elif name == "fatigue_monitor":
        metrics, more = _run_fatigue(cfg, out)
        files += more

    else:  # pragma: no cover - config validation rejects unknown names
        raise ValueError(name)

    report = {
        "scenario": name,
        "seed": cfg["scenario"]["seed"],
        "config_hash": config_hash(cfg),
        "metrics": metrics,
        "targets": judge(cfg, metrics),
        "outputs": sorted(files),
    }
    dump_json(report, out / REPORT_NAME)
    return report


def _run_fatigue(cfg: S.Config, out: Path) -> tuple[dict[str, Any], list[str]]:
    runs = S.simulate_fatigue(cfg)
    hist_dir = out / "history"
    hist_dir.mkdir(exist_ok=True)
    files = []
    for r in runs:
        fname = f"history/coupon_{r.index:03d}.csv"
        write_table(out / fname, ("cycle", "a_m", "k_max_pa_sqrt_m", "eps_sensor"), r.history.tolist())
        files.append(fname)
    write_csv(stack_coupons([r.dataset for r in runs]), out / "dataset.csv")
    res = S.analyze_fatigue(cfg, runs)
    rows = []
    for r, rep in zip(runs, res["reports"]):
        rows.append((r.index, r.a0, r.growth.status, r.growth.failure_cycle, rep.detection_cycle, rep.lead_time))
    write_table(out / "fatigue_summary.csv",
                ("block_id", "a0_m", "status", "failure_cycle", "detection_cycle", "lead_time"), rows)
    write_table(out / SERIES_DIR / "fig6b.csv", ("block_id", "cycle", "normalized_l", "cusum"),
                ((r.index, c, v, s) for r, rep in zip(runs, res["reports"])
                 for c, v, s in zip(rep.cycles, rep.normalized, rep.statistic)))
    metrics = {k: v for k, v in res.items() if k != "reports"}
    return metrics, files + ["dataset.csv", "fatigue_summary.csv", f"{SERIES_DIR}/fig6b.csv"]


def stack_coupons(parts: list[Dataset]) -> Dataset:
    """Concatenate per-coupon logs, shifting each clock so time stays non-decreasing."""
    shifted, t0 = [], 0.0
    for ds in parts:
        if len(ds):
            ds = dataclasses.replace(ds, time_s=ds.time_s + t0)
            t0 = float(ds.time_s[-1])
        shifted.append(ds)
    return Dataset.concat(shifted) if shifted else Dataset.build(0)


def find_reports(run_dir: "os.PathLike[str] | str") -> list[Path]:
    return sorted(Path(run_dir).rglob(REPORT_NAME))


def load_report(path: Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def failure_table(path: "os.PathLike[str] | str") -> dict[int, Optional[int]]:
    """``block_id -> failure_cycle`` from a fatigue summary file (empty cell = censored)."""
    out: dict[int, Optional[int]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            text = row.get("failure_cycle", "")
            out[int(row["block_id"])] = int(float(text)) if text else None
    return out
