"""
Inverse layer: inductance -> temperature and inductance -> strain maps.

Temperature maps are polynomials; strain maps are either polynomials or the
"atanh law", i.e. the exact inverse of the forward chain tanh susceptibility
-> demagnetization -> linear coupling.  That chain is a Moebius transform of
``tanh(eps / eps_sat)``, so in normalized inductance ``u``

    u = (a + b*t) / (1 + d*t),   t = tanh(eps / eps_sat)

and the fitted inverse is ``eps = eps_sat * atanh((u - a) / (b - d*u))``.

Inductances are normalized as ``u = (L - l_center) / l_scale`` before fitting
because raw values sit on a ~30 uH pedestal with nH-scale modulation.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
from typing import Optional

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as P

from .dataset import Dataset, fmt
from .errors import (ConvergenceError, InsufficientDataError, NonMonotoneFitError, OutOfRangeError,
                     SchemaError)
from .lm import LMOptions, levenberg_marquardt

MODEL_VERSION = "1"
MONOTONE_SAMPLES = 256


@dataclasses.dataclass(frozen=True)
class FitReport:
    rmse: float
    ci95_half: float
    n_points: int
    per_cycle_max_dev: float
    converged: bool = True
    iterations: int = 0
    final_cost: float = 0.0


@dataclasses.dataclass(frozen=True)
class TempCalModel:
    coeffs: tuple[float, ...]
    degree: int
    valid_range: tuple[float, float]
    l_center: float
    l_scale: float
    margin: float = 0.05


@dataclasses.dataclass(frozen=True)
class StrainCalModel:
    coeffs: tuple[float, ...]
    form: str
    ref_temp: float
    cte_i: float
    cte_p: float
    valid_range: tuple[float, float]
    l_center: float
    l_scale: float
    margin: float = 0.05


def ci95(residuals) -> float:
    """Half-width of the central 95% interval from linearly interpolated empirical percentiles."""
    r = np.asarray(residuals, dtype=float)
    if r.size < 20:
        raise InsufficientDataError(f"ci95 needs at least 20 residuals, got {r.size}")
    return _half_width(r)


def _half_width(r: npt.NDArray[np.float64]) -> float:
    lo, hi = np.percentile(r, [2.5, 97.5])
    return float(hi - lo) / 2.0


def _report(residuals: npt.NDArray[np.float64], cycles: npt.NDArray[np.int64], converged: bool = True,
            iterations: int = 0, final_cost: float = 0.0) -> FitReport:
    per_cycle = max(abs(float(residuals[cycles == c].mean())) for c in np.unique(cycles))
    return FitReport(
        rmse=float(np.sqrt(np.mean(residuals**2))),
        ci95_half=_half_width(residuals),
        n_points=int(residuals.size),
        per_cycle_max_dev=per_cycle,
        converged=converged,
        iterations=iterations,
        final_cost=final_cost,
    )


def _normalizer(l: npt.NDArray[np.float64]) -> tuple[float, float]:
    lo, hi = float(np.min(l)), float(np.max(l))
    scale = (hi - lo) / 2.0
    if scale <= 0:
        raise InsufficientDataError("inductance readings do not vary")
    return (lo + hi) / 2.0, scale


def _check_range(l, valid_range: tuple[float, float], margin: float) -> None:
    lo, hi = valid_range
    pad = margin * (hi - lo)
    l = np.asarray(l, dtype=float)
    if np.any(l < lo - pad) or np.any(l > hi + pad):
        raise OutOfRangeError(f"inductance outside calibrated range [{lo:.9g}, {hi:.9g}] H (margin {margin:g})")


def _sign_constant(values: npt.NDArray[np.float64]) -> bool:
    return bool(np.all(values > 0) or np.all(values < 0))


# -- temperature ----------------------------------------------------------------------------------


def fit_temp_model(ds: Dataset, degree: int = 3, margin: float = 0.05) -> tuple[TempCalModel, FitReport]:
    """Least-squares polynomial of thermocouple temperature on the Monel channel inductance."""
    if not 1 <= degree <= 5:
        raise ValueError(f"degree must lie in [1, 5], got {degree}")
    mask = ds.present("l_temp_ch_h", "ref_temp_c")
    if mask.sum() < degree + 2:
        raise InsufficientDataError(f"need at least {degree + 2} rows with temperature data, got {int(mask.sum())}")
    l = ds.l_temp_ch_h[mask]
    t = ds.ref_temp_c[mask]
    center, scale = _normalizer(l)
    u = (l - center) / scale
    coeffs = P.polyfit(u, t, degree)

    grid = np.linspace(-1.0, 1.0, MONOTONE_SAMPLES)
    if not _sign_constant(P.polyval(grid, P.polyder(coeffs))):
        raise NonMonotoneFitError("fitted temperature map is not monotone over the data range")

    model = TempCalModel(tuple(float(c) for c in coeffs), degree, (float(l.min()), float(l.max())), center, scale, margin)
    residuals = P.polyval(u, coeffs) - t
    return model, _report(residuals, ds.cycle_id[mask])


def invert_temp(m: TempCalModel, l):
    _check_range(l, m.valid_range, m.margin)
    u = (np.asarray(l, dtype=float) - m.l_center) / m.l_scale
    out = P.polyval(u, np.array(m.coeffs))
    return float(out) if np.ndim(out) == 0 else out


# -- strain ---------------------------------------------------------------------------------------


def cte_correct(eps_apparent, t_hat, m: StrainCalModel):
    """Remove the CTE mismatch strain accumulated between ``m.ref_temp`` and ``t_hat``."""
    out = np.asarray(eps_apparent, dtype=float) - (m.cte_i - m.cte_p) * (np.asarray(t_hat, dtype=float) - m.ref_temp)
    return float(out) if np.ndim(out) == 0 else out


def cte_apply(eps_mech, t_hat, m: StrainCalModel):
    """Inverse of :func:`cte_correct`."""
    out = np.asarray(eps_mech, dtype=float) + (m.cte_i - m.cte_p) * (np.asarray(t_hat, dtype=float) - m.ref_temp)
    return float(out) if np.ndim(out) == 0 else out


def _atanh_forward(theta, x):
    a, b, d, k = theta
    t = np.tanh(k * x)
    return (a + b * t) / (1.0 + d * t)


def _atanh_jacobian(theta, x):
    a, b, d, k = theta
    t = np.tanh(k * x)
    den = 1.0 + d * t
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0 / den
    jac[:, 1] = t / den
    jac[:, 2] = -t * (a + b * t) / den**2
    jac[:, 3] = (b - a * d) / den**2 * (1.0 - t * t) * x
    return jac


def _strain_g(m: StrainCalModel, l):
    u = (np.asarray(l, dtype=float) - m.l_center) / m.l_scale
    c = np.array(m.coeffs)
    if m.form == "polynomial":
        return P.polyval(u, c)
    a, b, d, eps_sat = c
    arg = (u - a) / (b - d * u)
    if np.any(np.abs(arg) >= 1.0):
        raise OutOfRangeError("inductance outside the invertible span of the atanh-law model")
    return eps_sat * np.arctanh(arg)


def _strain_monotone(m: StrainCalModel) -> bool:
    grid = np.linspace(-1.0, 1.0, MONOTONE_SAMPLES)
    c = np.array(m.coeffs)
    if m.form == "polynomial":
        return _sign_constant(P.polyval(grid, P.polyder(c)))
    a, b, d, _ = c
    den = b - d * grid
    return _sign_constant(den) and bool(np.all(np.abs((grid - a) / den) < 1.0)) and (b - a * d) != 0.0


def temperature_readout(ds: Dataset, temp_model: Optional[TempCalModel]) -> npt.NDArray[np.float64]:
    """Per-row temperature: the Monel channel through ``temp_model`` when given, else the thermocouple."""
    if temp_model is not None:
        if np.any(np.isnan(ds.l_temp_ch_h)):
            raise SchemaError("temperature model given but l_temp_ch_h has gaps")
        return invert_temp(temp_model, ds.l_temp_ch_h)
    if np.any(np.isnan(ds.ref_temp_c)):
        raise SchemaError("no temperature model and ref_temp_c has gaps")
    return ds.ref_temp_c.copy()


def fit_strain_model(ds: Dataset, temp_model: Optional[TempCalModel] = None, form: str = "atanh", *,
                     cte_i: float = 12.0e-6, cte_p: float = 23.6e-6, ref_temp: float = 23.0,
                     degree: int = 3, margin: float = 0.05,
                     lm_options: Optional[LMOptions] = None) -> tuple[StrainCalModel, FitReport]:
    """
    Fit the inductance -> strain map on CTE-referenced targets.

    Each row's target is the strain the inclusion actually experiences, i.e.
    the reference strain plus the mismatch strain between ``ref_temp`` and the
    row temperature.  Residuals in the report are measured after inversion and
    CTE correction, against the reference strain.
    """
    if form not in ("atanh", "polynomial"):
        raise ValueError(f"unknown strain model form {form!r}")
    mask = ds.present("ref_strain", "l_strain_ch_h")
    if temp_model is not None:
        mask &= ds.present("l_temp_ch_h")
    else:
        mask &= ds.present("ref_temp_c")
    if mask.sum() < 8:
        raise InsufficientDataError(f"need at least 8 rows with strain data, got {int(mask.sum())}")
    sub = ds.select(mask)
    t_hat = temperature_readout(sub, temp_model)
    l = sub.l_strain_ch_h
    center, scale = _normalizer(l)
    u = (l - center) / scale
    shifted = StrainCalModel((), form, ref_temp, cte_i, cte_p, (0.0, 0.0), center, scale, margin)
    y = cte_apply(sub.ref_strain, t_hat, shifted)

    converged, iterations, cost = True, 0, 0.0
    if form == "polynomial":
        coeffs = tuple(float(c) for c in P.polyfit(u, y, degree))
    else:
        y_scale = float(np.max(np.abs(y)))
        x = y / y_scale
        k0 = 0.25
        basis = np.column_stack([np.ones_like(x), np.tanh(k0 * x)])
        (a0, b0), *_ = np.linalg.lstsq(basis, u, rcond=None)
        result = levenberg_marquardt(
            lambda th: _atanh_forward(th, x) - u,
            np.array([a0, b0, 0.0, k0]),
            jacobian_fn=lambda th: _atanh_jacobian(th, x),
            options=lm_options or LMOptions(max_iter=500, cost_tol=1e-15),
        )
        converged, iterations, cost = result.converged, result.iterations, result.cost
        if not converged:
            raise ConvergenceError(f"strain fit did not converge after {iterations} iterations "
                                   f"(final cost {cost:.3e})", final_cost=cost)
        a, b, d, k = result.theta
        if k < 0:
            # tanh is odd: (a, b, d, k) and (a, -b, -d, -k) describe the same curve
            b, d, k = -b, -d, -k
        coeffs = (float(a), float(b), float(d), float(y_scale / k))

    model = StrainCalModel(coeffs, form, ref_temp, cte_i, cte_p, (float(l.min()), float(l.max())), center, scale, margin)
    if not _strain_monotone(model):
        raise NonMonotoneFitError("fitted strain map is not monotone over the data range")
    residuals = invert_strain(model, l, t_hat) - sub.ref_strain
    return model, _report(residuals, sub.cycle_id, converged, iterations, cost)


def invert_strain(m: StrainCalModel, l, t_hat):
    """Mechanical strain estimate from a strain-channel reading and a temperature estimate."""
    _check_range(l, m.valid_range, m.margin)
    return cte_correct(_strain_g(m, l), t_hat, m)


def apparent_strain(m: StrainCalModel, l):
    """The fitted map without CTE correction."""
    _check_range(l, m.valid_range, m.margin)
    out = _strain_g(m, l)
    return float(out) if np.ndim(out) == 0 else out


def block_offsets(ds: Dataset, m: StrainCalModel, t_hat) -> dict[str, float]:
    """
    Spread of per-block mean strain error before and after CTE correction.

    Blocks are the constant-temperature sets in ``ds.block_id``; the
    uncorrected error is the fitted map's apparent strain minus the reference.
    """
    mask = ds.present("ref_strain", "l_strain_ch_h")
    t_hat = np.asarray(t_hat, dtype=float)[mask] if np.ndim(t_hat) else np.full(mask.sum(), float(t_hat))
    sub = ds.select(mask)
    raw = apparent_strain(m, sub.l_strain_ch_h) - sub.ref_strain
    corrected = cte_correct(raw + sub.ref_strain, t_hat, m) - sub.ref_strain
    raw_means, cor_means = [], []
    for block in np.unique(sub.block_id):
        sel = sub.block_id == block
        raw_means.append(raw[sel].mean())
        cor_means.append(corrected[sel].mean())
    return {
        "uncorrected": float(max(raw_means) - min(raw_means)),
        "corrected": float(max(cor_means) - min(cor_means)),
    }


# -- persistence ----------------------------------------------------------------------------------


def _join(values) -> str:
    return ", ".join(fmt(v) for v in values)


def _split(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def model_to_text(model, report: Optional[FitReport] = None) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    if isinstance(model, TempCalModel):
        body = {"kind": "temp", "form": "polynomial", "degree": str(model.degree)}
    else:
        body = {"kind": "strain", "form": model.form, "ref_temp": fmt(model.ref_temp),
                "cte_i": fmt(model.cte_i), "cte_p": fmt(model.cte_p)}
    cp["model"] = {
        "version": MODEL_VERSION,
        **body,
        "coeffs": _join(model.coeffs),
        "l_center": fmt(model.l_center),
        "l_scale": fmt(model.l_scale),
        "l_min": fmt(model.valid_range[0]),
        "l_max": fmt(model.valid_range[1]),
        "margin": fmt(model.margin),
    }
    if report is not None:
        cp["report"] = {
            "rmse": fmt(report.rmse),
            "ci95_half": fmt(report.ci95_half),
            "n_points": str(report.n_points),
            "per_cycle_max_dev": fmt(report.per_cycle_max_dev),
            "converged": "true" if report.converged else "false",
            "iterations": str(report.iterations),
            "final_cost": fmt(report.final_cost),
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save_model(model, path: "os.PathLike[str] | str", report: Optional[FitReport] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(model_to_text(model, report))


def load_model(path: "os.PathLike[str] | str"):
    """Return ``(model, report_or_None)`` from a saved model file."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            cp.read_file(handle)
        sec = cp["model"]
        if sec.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported model version {sec.get('version')!r}")
        common = dict(
            coeffs=_split(sec["coeffs"]),
            valid_range=(float(sec["l_min"]), float(sec["l_max"])),
            l_center=float(sec["l_center"]),
            l_scale=float(sec["l_scale"]),
            margin=float(sec["margin"]),
        )
        if sec["kind"] == "temp":
            model = TempCalModel(degree=int(sec["degree"]), **common)
        elif sec["kind"] == "strain":
            model = StrainCalModel(form=sec["form"], ref_temp=float(sec["ref_temp"]), cte_i=float(sec["cte_i"]),
                                   cte_p=float(sec["cte_p"]), **common)
        else:
            raise SchemaError(f"unknown model kind {sec['kind']!r}")
    except (KeyError, configparser.Error) as exc:
        raise SchemaError(f"malformed model file {path}: {exc}") from exc

    report = None
    if cp.has_section("report"):
        r = cp["report"]
        report = FitReport(
            rmse=float(r["rmse"]),
            ci95_half=float(r["ci95_half"]),
            n_points=int(r["n_points"]),
            per_cycle_max_dev=float(r["per_cycle_max_dev"]),
            converged=r["converged"] == "true",
            iterations=int(r["iterations"]),
            final_cost=float(r["final_cost"]),
        )
    return model, report
