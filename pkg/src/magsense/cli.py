"""
Command-line front end.

    magsense simulate  --scenario NAME [--config FILE] [--seed N] --out DIR
    magsense calibrate DATASET --channel {strain,temp} [--temp-model FILE] --out DIR
    magsense monitor   DATASET [--model FILE] [--temp-model FILE] [--failures FILE] --out DIR
    magsense report    RUN_DIR [--out DIR] [--format {csv,json}]

Exit codes: 0 ok, 1 usage or input, 2 fit failure, 3 schema, 4 model mismatch.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import calibration as cal
from . import detection as det
from . import runner
from . import scenarios as S
from .config import SCENARIOS, config_hash, default_config, load_config
from .dataset import read_csv
from .errors import (ConfigError, ConvergenceError, InsufficientDataError, MagsenseError, NonMonotoneFitError,
                     OutOfRangeError, SchemaError)

EXIT_OK, EXIT_USAGE, EXIT_FIT, EXIT_SCHEMA, EXIT_MISMATCH = 0, 1, 2, 3, 4

FIGURES = ("fig4a", "fig4b", "fig5c", "fig5d", "fig6a", "fig6b")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which is reserved for fit failures
        raise UsageError(message)


def _resolve_config(args) -> S.Config:
    if args.config:
        cfg = load_config(args.config, getattr(args, "scenario", None))
    else:
        cfg = default_config(getattr(args, "scenario", None) or "tensile_cal")
    if getattr(args, "seed", None) is not None:
        cfg["scenario"]["seed"] = args.seed
    return cfg


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _emit(obj: dict[str, Any], out: Path, stem: str, form: str) -> Path:
    """Write a flat summary as JSON or as a two-column key,value CSV."""
    if form == "json":
        path = out / f"{stem}.json"
        runner.dump_json(obj, path)
    else:
        path = out / f"{stem}.csv"
        runner.write_table(path, ("key", "value"), ((k, v) for k, v in obj.items()))
    return path


# -- simulate -------------------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if not args.scenario and not args.config:
        raise UsageError("simulate needs --scenario or --config")
    cfg = _resolve_config(args)
    out = _out_dir(args.out)
    report = runner.run_scenario(cfg, out)
    for t in report["targets"]:
        status = "PASS" if t["pass"] else "FAIL"
        print(f"{t['name']}: achieved {t['achieved']:.4g} target {t['target']:.4g} {status}")
    print(f"{report['scenario']} written to {out} (config {report['config_hash'][:12]})")
    return EXIT_OK


# -- calibrate ------------------------------------------------------------------------------------


def cmd_calibrate(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args.out)
    if args.channel == "temp":
        ds = read_csv(args.dataset, required=("l_temp_ch_h", "ref_temp_c"))
        rows = ds.select(ds.present("l_temp_ch_h", "ref_temp_c"))
        c = cfg["calibration"]
        model, report = cal.fit_temp_model(rows, c["temp_degree"], c["margin"])
        extra: dict[str, Any] = {}
    else:
        temp_model = _load_kind(args.temp_model, cal.TempCalModel) if args.temp_model else None
        required = ("ref_strain", "l_strain_ch_h") + (("l_temp_ch_h",) if temp_model else ("ref_temp_c",))
        ds = read_csv(args.dataset, required=required)
        model, report = cal.fit_strain_model(ds, temp_model, **S.strain_fit_kwargs(cfg))
        rows = ds.select(ds.present("ref_strain", "l_strain_ch_h"))
        extra = cal.block_offsets(rows, model, cal.temperature_readout(rows, temp_model))
        extra = {"overlay_uncorrected": extra["uncorrected"], "overlay_corrected": extra["corrected"]}

    model_path = out / f"model_{args.channel}.ini"
    cal.save_model(model, model_path, report)
    summary = {
        "channel": args.channel,
        "config_hash": config_hash(cfg),
        "rmse": report.rmse,
        "ci95_half": report.ci95_half,
        "n_points": report.n_points,
        "per_cycle_max_dev": report.per_cycle_max_dev,
        "converged": report.converged,
        "iterations": report.iterations,
        **extra,
    }
    _emit(summary, out, f"fit_report_{args.channel}", args.format)
    print(f"{args.channel} model written to {model_path}; ci95_half = {report.ci95_half:.4g}")
    return EXIT_OK


def _load_kind(path: str, kind: type):
    model, _ = cal.load_model(path)
    if not isinstance(model, kind):
        raise SchemaError(f"{path} holds a {type(model).__name__}, expected {kind.__name__}")
    return model


# -- monitor --------------------------------------------------------------------------------------


def _has_unloading(ds) -> bool:
    if np.all(np.isnan(ds.ref_stress_pa)):
        return False
    for k in np.unique(ds.cycle_id):
        s = ds.ref_stress_pa[ds.cycle_id == k]
        if s.size < 4 or np.ptp(s) == 0:
            return False
    return True


def cmd_monitor(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args.out)
    ds = read_csv(args.dataset, required=("l_strain_ch_h",))
    ds = ds.select(ds.present("l_strain_ch_h"))

    eps_hat = None
    if args.model:
        model = _load_kind(args.model, cal.StrainCalModel)
        temp_model = _load_kind(args.temp_model, cal.TempCalModel) if args.temp_model else None
        t_hat = (cal.temperature_readout(ds, temp_model) if temp_model or not np.any(np.isnan(ds.ref_temp_c))
                 else np.full(len(ds), model.ref_temp))
        eps_hat = cal.invert_strain(model, ds.l_strain_ch_h, t_hat)

    detector = args.detector
    if detector == "auto":
        detector = "onset" if _has_unloading(ds) else "cusum"

    summary: dict[str, Any] = {"detector": detector, "config_hash": config_hash(cfg)}
    if detector == "onset":
        trace = S.trace_from_dataset(ds)
        onset = det.plasticity_onset(trace, cfg["detection"]["onset_tol_h"], cfg["detection"]["persistence"])
        summary["onset_stress"] = onset
        cols = ("increment", "branch", "ref_stress_pa", "inductance_h", "eps_hat")
        est = eps_hat if eps_hat is not None else np.full(len(ds), np.nan)
        runner.write_table(out / "monitor_streams.csv", cols, zip(trace.increment, trace.branch, trace.sigma, trace.l, est))
        print(f"onset stress: {'none' if onset is None else f'{onset:.6g} Pa'}")
    else:
        failures = runner.failure_table(args.failures) if args.failures else {}
        ccfg = S.cusum_config(cfg)
        rows, per_block = [], []
        for b in np.unique(ds.block_id):
            sel = ds.block_id == b
            rep = det.monitor_series(ds.cycle_id[sel], ds.l_strain_ch_h[sel], ccfg, failures.get(int(b)))
            per_block.append((int(b), rep))
            est = eps_hat[sel] if eps_hat is not None else np.full(int(sel.sum()), np.nan)
            rows.extend((int(b), c, v, s, e) for c, v, s, e in zip(rep.cycles, rep.normalized, rep.statistic, est))
        runner.write_table(out / "monitor_streams.csv", ("block_id", "cycle", "normalized_l", "cusum", "eps_hat"), rows)
        runner.write_table(out / "monitor_blocks.csv",
                           ("block_id", "detection_cycle", "failure_cycle", "lead_time", "censored"),
                           ((b, r.detection_cycle, r.failure_cycle, r.lead_time, r.censored) for b, r in per_block))
        leads = np.array([r.lead_time for _, r in per_block if r.lead_time is not None], dtype=float)
        q = np.percentile(leads, [10, 50, 90]) if leads.size else [None] * 3
        detected = [r.detection_cycle for _, r in per_block if r.detection_cycle is not None]
        summary.update(
            n_streams=len(per_block),
            n_detected=len(detected),
            n_censored=sum(r.censored for _, r in per_block),
            lead_p10=q[0], lead_p50=q[1], lead_p90=q[2],
        )
        if len(per_block) == 1:
            summary["detection_cycle"] = per_block[0][1].detection_cycle
        print(f"{len(detected)} of {len(per_block)} streams alarmed; lead P50 = {q[1]}")
    _emit(summary, out, "monitor_summary", args.format)
    return EXIT_OK


# -- report ---------------------------------------------------------------------------------------


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    paths = runner.find_reports(run_dir) if run_dir.is_dir() else []
    if not paths:
        raise UsageError(f"no {runner.REPORT_NAME} found under {run_dir}")
    out = _out_dir(args.out or str(run_dir / "report"))
    reports = [(p, runner.load_report(p)) for p in paths]

    target_rows, metric_rows = [], []
    for p, rep in reports:
        for t in rep["targets"]:
            target_rows.append((rep["scenario"], t["name"], t["target"], t["achieved"], t["rel_tol"], t["pass"]))
        for k, v in sorted(rep["metrics"].items()):
            metric_rows.append((rep["scenario"], k, v))

    lines = [f"{'scenario':<16} {'target':<16} {'declared':>12} {'achieved':>12}  result"]
    for sc, name, tgt, ach, _, ok in target_rows:
        lines.append(f"{sc:<16} {name:<16} {tgt:>12.4g} {ach:>12.4g}  {'PASS' if ok else 'FAIL'}")
    lines.append("")
    for sc, k, v in metric_rows:
        shown = f"{v:.6g}" if isinstance(v, float) else str(v)
        lines.append(f"{sc:<16} {k:<24} {shown}")
    text = "\n".join(lines) + "\n"
    with open(out / "report.txt", "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    print(text, end="")

    if args.format == "json":
        runner.dump_json({
            "runs": [{"path": str(p.parent.relative_to(run_dir)), **rep} for p, rep in reports],
            "targets": [dict(zip(("scenario", "name", "target", "achieved", "rel_tol", "pass"), r)) for r in target_rows],
        }, out / "summary.json")
    else:
        runner.write_table(out / "summary.csv", ("scenario", "name", "target", "achieved", "rel_tol", "pass"), target_rows)
        runner.write_table(out / "metrics.csv", ("scenario", "metric", "value"), metric_rows)

    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    for p, _ in reports:
        for fig in FIGURES:
            src = p.parent / runner.SERIES_DIR / f"{fig}.csv"
            if src.exists():
                shutil.copyfile(src, plots / f"{fig}.csv")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="magsense", description="Embedded magnetic sensor simulation and analysis.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, scenario: bool = False):
        p.add_argument("--config", help="scenario config file (INI)")
        if scenario:
            p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="run a scenario and write its dataset and run report")
    common(p, scenario=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit a strain or temperature model to a dataset")
    p.add_argument("dataset")
    p.add_argument("--channel", choices=("strain", "temp"), required=True)
    p.add_argument("--temp-model", help="temperature model supplying the CTE correction temperature")
    common(p, scenario=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("monitor", help="run inversion and damage detection on a dataset")
    p.add_argument("dataset")
    p.add_argument("--model", help="strain model used to report strain estimates")
    p.add_argument("--temp-model")
    p.add_argument("--failures", help="fatigue_summary.csv giving per-block failure cycles")
    p.add_argument("--detector", choices=("auto", "onset", "cusum"), default="auto")
    common(p, scenario=True)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("report", help="tabulate run reports against targets and gather plot series")
    p.add_argument("run_dir")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"magsense: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"magsense: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OutOfRangeError as exc:
        print(f"magsense: model mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ConvergenceError, NonMonotoneFitError, InsufficientDataError) as exc:
        print(f"magsense: fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ConfigError, MagsenseError, OSError) as exc:
        print(f"magsense: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
