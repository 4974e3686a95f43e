"""
Forward simulation of the five experiment analogs and their analysis.

Each ``simulate_*`` function turns a resolved configuration into one or more
:class:`~magsense.dataset.Dataset` objects by running mechanics -> materials
-> coupling -> instrument per sample.  ``analyze_*`` functions run the inverse
pipeline on those datasets and return plain metric dictionaries.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Optional

import numpy as np
import numpy.typing as npt

from . import calibration as cal
from . import detection as det
from . import emcoupling as em
from . import materials as mat
from . import mechanics as mech
from .dataset import Dataset

Config = dict[str, dict[str, Any]]


# -- builders -------------------------------------------------------------------------------------


def _pick(cls, values: dict[str, Any]):
    names = {f.name for f in dataclasses.fields(cls)}
    return cls(**{k: v for k, v in values.items() if k in names})


def galfenol(cfg: Config) -> mat.GalfenolParams:
    return _pick(mat.GalfenolParams, cfg["materials.galfenol"])


def monel(cfg: Config) -> mat.MonelParams:
    return _pick(mat.MonelParams, cfg["materials.monel"])


def coupon(cfg: Config) -> mech.CouponSpec:
    return _pick(mech.CouponSpec, cfg["coupon"])


def sensor_placement(cfg: Config) -> mech.SensorPlacement:
    return _pick(mech.SensorPlacement, cfg["sensor"])


def paris(cfg: Config, a0: Optional[float] = None) -> mech.ParisParams:
    values = dict(cfg["paris"])
    if a0 is not None:
        values["a0"] = a0
    return _pick(mech.ParisParams, values)


def noise(cfg: Config) -> em.NoiseModel:
    return em.NoiseModel(cfg["noise"]["gaussian_sd"], cfg["noise"]["quant_step"], cfg["scenario"]["seed"])


def cusum_config(cfg: Config) -> det.CusumConfig:
    return _pick(det.CusumConfig, cfg["detection"])


@dataclasses.dataclass(frozen=True)
class Channel:
    """One coil interrogating one inclusion."""

    coil: em.CoilSpec
    inclusion: em.InclusionSpec
    placement: em.PlacementSpec

    @property
    def gain(self) -> float:
        return em.coupling_gain(self.coil, self.inclusion, self.placement)

    def shift_from_chi(self, chi):
        return em.inductance_shift(self.coil, self.inclusion, self.placement,
                                   mat.apparent_susceptibility(chi, self.inclusion.demag_n))


def strain_channel(cfg: Config) -> Channel:
    return Channel(
        _pick(em.CoilSpec, cfg["coil.strain"]),
        em.InclusionSpec(galfenol(cfg), **cfg["inclusion.galfenol"]),
        _pick(em.PlacementSpec, cfg["placement"]),
    )


def temp_channel(cfg: Config) -> Channel:
    return Channel(
        _pick(em.CoilSpec, cfg["coil.temp"]),
        em.InclusionSpec(monel(cfg), **cfg["inclusion.monel"]),
        _pick(em.PlacementSpec, cfg["placement"]),
    )


def galfenol_shift(cfg: Config, eps, temp) -> npt.NDArray[np.float64]:
    ch = strain_channel(cfg)
    return ch.shift_from_chi(mat.galfenol_susceptibility(eps, temp, ch.inclusion.material))


def monel_shift(cfg: Config, temp) -> npt.NDArray[np.float64]:
    ch = temp_channel(cfg)
    return ch.shift_from_chi(mat.monel_susceptibility(temp, ch.inclusion.material))


def _read_pair(cfg: Config, dl_strain, dl_temp, rng: np.random.Generator, crosstalk: bool):
    """Instrument both coils, optionally leaking each shift into the other channel."""
    nz = noise(cfg)
    cs, ct = strain_channel(cfg).coil, temp_channel(cfg).coil
    if crosstalk:
        df = abs(cs.frequency - ct.frequency)
        kappa0, bw = cfg["noise"]["crosstalk_kappa0"], cfg["noise"]["crosstalk_bw"]
        dl_strain, dl_temp = (em.crosstalk_inject(dl_strain, dl_temp, df, kappa0, bw),
                              em.crosstalk_inject(dl_temp, dl_strain, df, kappa0, bw))
    l_s = em.read_channels(cs.nominal_inductance, dl_strain, nz, rng)
    l_t = em.read_channels(ct.nominal_inductance, dl_temp, nz, rng)
    return l_s, l_t


def _rng(cfg: Config, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(cfg["scenario"]["seed"]), stream]))


# -- calibration scenarios ------------------------------------------------------------------------


def _load_cycles(max_stress: float, n_cycles: int, points: int, bipolar: bool):
    """Stress schedule of repeated triangle cycles; returns (stress, cycle index)."""
    up = np.linspace(0.0, 1.0, points)
    if bipolar:
        one = np.concatenate([up, 1.0 - up[1:], -up[1:], -1.0 + up[1:-1]])
    else:
        one = np.concatenate([up, 1.0 - up[1:-1]])
    stress = np.tile(one * max_stress, n_cycles)
    cycle = np.repeat(np.arange(n_cycles), one.size)
    return stress, cycle


def _strain_rows(cfg: Config, temps: list[float], rng: np.random.Generator, bipolar: bool,
                 block0: int = 0, cycle0: int = 0, t0: float = 0.0, crosstalk: bool = False) -> Dataset:
    proto = cfg["protocol"]
    spec = coupon(cfg)
    sp = sensor_placement(cfg)
    g = galfenol(cfg)
    ref_temp = cfg["calibration"]["ref_temp"]
    parts = []
    for j, temp in enumerate(temps):
        stress, cycle = _load_cycles(proto["max_stress"], proto["cycles_per_temp"], proto["points_per_branch"], bipolar)
        n = stress.size
        ref_strain = mech.mechanical_strain(spec, stress)
        eps = mech.sensor_strain(spec, sp, stress, dt=temp - ref_temp, alpha_i=g.cte)
        temp_col = np.full(n, float(temp))
        l_s, l_t = _read_pair(cfg, galfenol_shift(cfg, eps, temp_col), monel_shift(cfg, temp_col), rng, crosstalk)
        parts.append(Dataset.build(
            n,
            time_s=t0 + proto["sample_period"] * np.arange(n),
            cycle_id=cycle0 + cycle + j * proto["cycles_per_temp"],
            block_id=np.full(n, block0 + j),
            ref_stress_pa=stress,
            ref_strain=ref_strain,
            ref_temp_c=temp_col,
            l_strain_ch_h=l_s,
            l_temp_ch_h=l_t,
        ))
        t0 = float(parts[-1].time_s[-1]) + proto["sample_period"]
    return Dataset.concat(parts)


def _thermal_rows(cfg: Config, t_min: float, t_max: float, cycles: int, points: int, rng: np.random.Generator,
                  block: int = 0, t0: float = 0.0, crosstalk: bool = False, strain_channel_on: bool = True) -> Dataset:
    ramp = np.linspace(0.0, 1.0, points)
    one = np.concatenate([ramp, 1.0 - ramp[1:-1]])
    temps = t_min + (t_max - t_min) * np.tile(one, cycles)
    cycle = np.repeat(np.arange(cycles), one.size)
    n = temps.size
    g = galfenol(cfg)
    spec = coupon(cfg)
    eps = mech.thermal_mismatch_strain(g.cte, spec.cte, temps - cfg["calibration"]["ref_temp"])
    l_s, l_t = _read_pair(cfg, galfenol_shift(cfg, eps, temps), monel_shift(cfg, temps), rng, crosstalk)
    return Dataset.build(
        n,
        time_s=t0 + cfg["protocol"]["sample_period"] * np.arange(n),
        cycle_id=cycle,
        block_id=np.full(n, block),
        load_n=np.zeros(n),
        ref_stress_pa=np.zeros(n),
        ref_temp_c=temps,
        l_strain_ch_h=l_s if strain_channel_on else np.full(n, np.nan),
        l_temp_ch_h=l_t,
    )


def simulate_tensile_cal(cfg: Config) -> Dataset:
    return _strain_rows(cfg, cfg["protocol"]["temperatures"], _rng(cfg), bipolar=False)


def simulate_temp_cal(cfg: Config) -> Dataset:
    p = cfg["protocol"]
    return _thermal_rows(cfg, p["t_min"], p["t_max"], p["cycles"], p["points_per_ramp"], _rng(cfg),
                         strain_channel_on=False)


def simulate_noncontact(cfg: Config) -> Dataset:
    """Thermal sweep (block 0) for the Monel coil, then load cycles at each temperature (blocks 1..)."""
    p = cfg["protocol"]
    rng = _rng(cfg)
    sweep = _thermal_rows(cfg, p["sweep_t_min"], p["sweep_t_max"], p["sweep_cycles"], p["sweep_points_per_ramp"],
                          rng, block=0, crosstalk=True)
    loads = _strain_rows(cfg, p["temperatures"], rng, bipolar=True, block0=1,
                         cycle0=int(sweep.cycle_id.max()) + 1, t0=float(sweep.time_s[-1]) + p["sample_period"],
                         crosstalk=True)
    return Dataset.concat([sweep, loads])


def strain_fit_kwargs(cfg: Config) -> dict[str, Any]:
    c = cfg["calibration"]
    return dict(form=c["strain_form"], cte_i=cfg["materials.galfenol"]["cte"], cte_p=cfg["coupon"]["cte"],
                ref_temp=c["ref_temp"], degree=c["strain_degree"], margin=c["margin"])


def analyze_strain(cfg: Config, ds: Dataset, temp_model: Optional[cal.TempCalModel] = None) -> dict[str, Any]:
    loads = ds.select(ds.present("ref_strain", "l_strain_ch_h"))
    model, report = cal.fit_strain_model(loads, temp_model, **strain_fit_kwargs(cfg))
    t_hat = cal.temperature_readout(loads, temp_model)
    eps_hat = cal.invert_strain(model, loads.l_strain_ch_h, t_hat)
    offsets = cal.block_offsets(loads, model, t_hat)
    return {
        "model": model,
        "report": report,
        "t_hat": t_hat,
        "eps_hat": eps_hat,
        "eps_apparent": cal.apparent_strain(model, loads.l_strain_ch_h),
        "rows": loads,
        "ci95_strain": report.ci95_half,
        "strain_range": float(np.ptp(loads.ref_strain)),
        "overlay_uncorrected": offsets["uncorrected"],
        "overlay_corrected": offsets["corrected"],
    }


def analyze_temp(cfg: Config, ds: Dataset) -> dict[str, Any]:
    rows = ds.select(ds.present("l_temp_ch_h", "ref_temp_c") & np.isnan(ds.ref_strain))
    model, report = cal.fit_temp_model(rows, cfg["calibration"]["temp_degree"], cfg["calibration"]["margin"])
    return {
        "model": model,
        "report": report,
        "rows": rows,
        "t_hat": cal.invert_temp(model, rows.l_temp_ch_h),
        "ci95_temp": report.ci95_half,
        "temp_range": float(np.ptp(rows.ref_temp_c)),
    }


def sensitivity_ratio(cfg: Config, reference: Optional[Config] = None) -> float:
    """Coupling gain of the reference (contact) geometry over that of ``cfg``."""
    reference = reference or _with_placement(cfg, 0.0, 0.0)
    return strain_channel(reference).gain / strain_channel(cfg).gain


def _with_placement(cfg: Config, depth: float, liftoff: float) -> Config:
    out = {k: dict(v) for k, v in cfg.items()}
    out["placement"]["depth"] = depth
    out["placement"]["liftoff"] = liftoff
    return out


# -- plasticity -----------------------------------------------------------------------------------


def bend_peaks(cfg: Config) -> npt.NDArray[np.float64]:
    p = cfg["protocol"]
    sy = cfg["coupon"]["sigma_y"]
    n = int(round((p["peak_stop"] - p["peak_start"]) / p["peak_step"])) + 1
    return sy * np.linspace(p["peak_start"], p["peak_stop"], n)


def simulate_bend_plasticity(cfg: Config) -> Dataset:
    """Load/unload increments with rising peak outer-fibre stress on a three-point bend bar."""
    spec = coupon(cfg)
    sp = sensor_placement(cfg)
    n_pts = cfg["protocol"]["points_per_branch"]
    sig, eps_outer, cyc = [], [], []
    prior = 0.0
    for k, peak in enumerate(bend_peaks(cfg)):
        s, e, _ = mech.plastic_cycle_path(peak, n_pts, spec, prior)
        prior = max(prior, peak)
        sig.append(s)
        eps_outer.append(e)
        cyc.append(np.full(s.size, k))
    sigma = np.concatenate(sig)
    eps_o = np.concatenate(eps_outer)
    n = sigma.size
    eps = sp.transfer_eff * mech.strain_at_depth(eps_o, sp.depth_from_surface, spec)
    temp = np.full(n, cfg["calibration"]["ref_temp"])
    l_s = em.read_channels(strain_channel(cfg).coil.nominal_inductance, galfenol_shift(cfg, eps, temp),
                           noise(cfg), _rng(cfg))
    return Dataset.build(
        n,
        time_s=cfg["protocol"]["sample_period"] * np.arange(n),
        cycle_id=np.concatenate(cyc),
        block_id=np.zeros(n, dtype=np.int64),
        load_n=mech.bend_load_for_stress(sigma, spec),
        ref_stress_pa=sigma,
        ref_strain=eps_o,
        ref_temp_c=temp,
        l_strain_ch_h=l_s,
    )


def trace_from_dataset(ds: Dataset) -> det.CycleTrace:
    """Split each increment at its first peak-stress sample into loading and unloading branches."""
    branch = np.empty(len(ds), dtype=object)
    for k in np.unique(ds.cycle_id):
        idx = np.flatnonzero(ds.cycle_id == k)
        peak = idx[int(np.argmax(ds.ref_stress_pa[idx]))]
        branch[idx] = np.where(idx <= peak, "loading", "unloading")
    return det.CycleTrace(ds.ref_stress_pa, ds.l_strain_ch_h, branch.astype(str), ds.cycle_id)


def analyze_bend(cfg: Config, ds: Dataset) -> dict[str, Any]:
    trace = trace_from_dataset(ds)
    onset = det.plasticity_onset(trace, cfg["detection"]["onset_tol_h"], cfg["detection"]["persistence"])
    return {"onset_stress": onset, "trace": trace}


def onset_oracle(cfg: Config) -> Optional[float]:
    """
    Stress at which the residual plastic strain, passed through the noiseless
    forward model, first shifts the zero-load reading by the onset tolerance.
    """
    spec = coupon(cfg)
    sp = sensor_placement(cfg)
    tol = cfg["detection"]["onset_tol_h"]
    temp = cfg["calibration"]["ref_temp"]
    factor = sp.transfer_eff * (1.0 - 2.0 * sp.depth_from_surface / spec.h)
    base = galfenol_shift(cfg, 0.0, temp)

    def excess(sigma: float) -> float:
        return galfenol_shift(cfg, factor * mech.plastic_strain(sigma, spec), temp) - base - tol

    hi = float(bend_peaks(cfg)[-1])
    if excess(hi) <= 0:
        return None
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


# -- fatigue --------------------------------------------------------------------------------------


@dataclasses.dataclass
class CouponRun:
    index: int
    a0: float
    growth: mech.CrackGrowthResult
    dataset: Dataset
    history: npt.NDArray[np.float64]  # columns: cycle, a, k_max, eps_sensor


def fatigue_loads(cfg: Config) -> tuple[float, float]:
    spec = coupon(cfg)
    p = cfg["protocol"]
    return mech.bend_load_for_stress(p["stress_min"], spec), mech.bend_load_for_stress(p["stress_max"], spec)


def sample_a0(cfg: Config, n: int) -> npt.NDArray[np.float64]:
    """Lognormal initial flaw sizes, one child seed per coupon."""
    seeds = np.random.SeedSequence([int(cfg["scenario"]["seed"]), 1]).spawn(n)
    sig = cfg["paris"]["a0_sigma_log"]
    return np.array([cfg["paris"]["a0"] * np.exp(sig * np.random.default_rng(s).standard_normal()) for s in seeds])


def run_coupon(cfg: Config, index: int, a0: float, grow_only: bool = False) -> CouponRun:
    spec = coupon(cfg)
    sp = sensor_placement(cfg)
    f_min, f_max = fatigue_loads(cfg)
    pp = cfg["paris"]
    growth = mech.grow_crack(spec, f_min, f_max, paris(cfg, a0), step=pp["step"], max_cycles=pp["max_cycles"])
    if grow_only:
        return CouponRun(index, a0, growth, Dataset.build(0), np.empty((0, 4)))

    end = growth.failure_cycle if growth.failure_cycle is not None else pp["max_cycles"]
    every = cfg["protocol"]["sample_every"]
    cycles = np.arange(0.0, float(end), every)
    a = growth.crack_at(cycles)
    loads = np.full(cycles.size, f_max)
    eps = mech.sensor_strain(spec, sp, loads, crack=a, dt=0.0, alpha_i=cfg["materials.galfenol"]["cte"])
    temp = np.full(cycles.size, cfg["calibration"]["ref_temp"])
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg["scenario"]["seed"]), 2, index]))
    l_s = em.read_channels(strain_channel(cfg).coil.nominal_inductance, galfenol_shift(cfg, eps, temp),
                           noise(cfg), rng)
    ds = Dataset.build(
        cycles.size,
        time_s=cycles / cfg["protocol"]["frequency"],
        cycle_id=cycles.astype(np.int64),
        block_id=np.full(cycles.size, index),
        load_n=loads,
        ref_stress_pa=np.full(cycles.size, cfg["protocol"]["stress_max"]),
        ref_temp_c=temp,
        l_strain_ch_h=l_s,
    )
    hist_n = np.array([s.cycle for s in growth.history])
    hist_a = np.array([s.a for s in growth.history])
    hist_k = mech.stress_intensity_senb(f_max, hist_a, spec)
    hist_e = mech.sensor_strain(spec, sp, np.full(hist_a.size, f_max), crack=hist_a, alpha_i=cfg["materials.galfenol"]["cte"])
    return CouponRun(index, a0, growth, ds, np.column_stack([hist_n, hist_a, hist_k, hist_e]))


def _pool_size() -> int:
    env = os.environ.get("MAGSENSE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_coupon_star(args):
    return run_coupon(*args)


def simulate_fatigue(cfg: Config, n_coupons: Optional[int] = None, grow_only: bool = False) -> list[CouponRun]:
    n = n_coupons if n_coupons is not None else cfg["protocol"]["n_coupons"]
    a0s = sample_a0(cfg, n)
    jobs = [(cfg, i, float(a0s[i]), grow_only) for i in range(n)]
    workers = min(_pool_size(), n)
    if workers <= 1:
        return [run_coupon(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_coupon_star, jobs))


def monitor_coupon(cfg: Config, run: CouponRun) -> det.MonitorReport:
    ds = run.dataset
    return det.monitor_series(ds.cycle_id, ds.l_strain_ch_h, cusum_config(cfg), run.growth.failure_cycle)


def no_growth_series(cfg: Config, seed: int, n_samples: int = 5000) -> npt.NDArray[np.float64]:
    """Readings of an uncracked coupon held at peak load: pure instrument noise."""
    spec = coupon(cfg)
    sp = sensor_placement(cfg)
    _, f_max = fatigue_loads(cfg)
    eps = mech.sensor_strain(spec, sp, f_max, alpha_i=cfg["materials.galfenol"]["cte"])
    dl = galfenol_shift(cfg, np.full(n_samples, eps), np.full(n_samples, cfg["calibration"]["ref_temp"]))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    return em.read_channels(strain_channel(cfg).coil.nominal_inductance, dl, noise(cfg), rng)


def analyze_fatigue(cfg: Config, runs: list[CouponRun]) -> dict[str, Any]:
    failures = np.array([r.growth.failure_cycle for r in runs if r.growth.failure_cycle is not None], dtype=float)
    reports = [monitor_coupon(cfg, r) for r in runs]
    leads = np.array([rep.lead_time for rep in reports if rep.lead_time is not None], dtype=float)
    q = np.percentile(leads, [10, 50, 90]) if leads.size else [np.nan] * 3
    return {
        "reports": reports,
        "n_coupons": len(runs),
        "n_failed": int(failures.size),
        "failure_mean": float(failures.mean()) if failures.size else float("nan"),
        "failure_sd": float(failures.std(ddof=1)) if failures.size > 1 else float("nan"),
        "lead_p10": float(q[0]),
        "lead_p50": float(q[1]),
        "lead_p90": float(q[2]),
        "lead_ge_1000_fraction": float(np.mean([(rep.lead_time or 0) >= 1000 for rep in reports])),
    }
