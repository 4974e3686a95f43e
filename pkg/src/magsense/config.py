"""
Scenario configuration: sectioned INI text, per-scenario defaults, strict keys.

Every value has a typed default; the file may override any of them but may
not introduce sections or keys that do not exist.  The resolved configuration
is canonicalized to JSON for hashing so that every output can be traced back to
the exact parameters that produced it.
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import json
import os
from typing import Any, Optional

from .errors import ConfigError

SCENARIOS = ("tensile_cal", "temp_cal", "noncontact", "bend_plasticity", "fatigue_monitor")

# Read noise of the simulated LCR meter.  Fitted once so the contact-coil
# calibration pipelines land near +/-27 ue and +/-0.75 degC; see README.
DEFAULT_READ_SD = 0.55e-9  # H
DEFAULT_QUANT_STEP = 1e-11  # H

_BASE: dict[str, dict[str, Any]] = {
    "scenario": {"name": "tensile_cal", "seed": 0},
    "materials.galfenol": {
        "chi0": 100.0, "delta_chi": 50.0, "eps_sat": 2.0e-3, "sensing_range": 400e-6,
        "curie_temp": 700.0, "cte": 12.0e-6, "m_sat": 1.3e6, "h_c": 100.0,
    },
    "materials.monel": {
        "chi0": 40.0, "curie_temp": 100.0, "beta": 0.36, "cte": 13.9e-6, "m_sat": 2.4e5, "h_c": 0.0,
    },
    "inclusion.galfenol": {"length": 5e-3, "width": 0.5e-3},
    "inclusion.monel": {"length": 5e-3, "width": 0.5e-3},
    "coil.strain": {
        "outer_diameter": 11e-3, "height": 1e-3, "turns": 40, "nominal_inductance": 31.8e-6,
        "frequency": 1000.0, "drive_voltage": 1.0, "drive_current": 10e-3,
    },
    "coil.temp": {
        "outer_diameter": 11e-3, "height": 1e-3, "turns": 40, "nominal_inductance": 31.8e-6,
        "frequency": 1100.0, "drive_voltage": 1.0, "drive_current": 10e-3,
    },
    "placement": {"depth": 0.0, "liftoff": 0.0, "skin_effect": False, "conductivity": 1.9e7},
    "coupon": {
        "kind": "uniaxial", "b": 6e-3, "h": 3e-3, "span": 48e-3, "e_mod": 70e9, "sigma_y": 480e6,
        "ro_n": 15.0, "ro_alpha": 0.5, "cte": 23.6e-6,
    },
    "sensor": {"depth_from_surface": 0.0, "transfer_eff": 1.0},
    "paris": {
        "c_coef": 4.1e-32, "m_exp": 3.5, "dk_th": 0.8e6, "k_ic": 28e6, "a0": 50e-6,
        "a0_sigma_log": 0.5, "step": 10.0, "max_cycles": 5e5,
    },
    "noise": {
        "gaussian_sd": DEFAULT_READ_SD, "quant_step": DEFAULT_QUANT_STEP,
        "crosstalk_kappa0": 0.05, "crosstalk_bw": 10.0,
    },
    "detection": {
        "k": 0.5, "h": 14.0, "baseline_window": 200, "sign": 1,
        "onset_tol_h": 4.0 * DEFAULT_READ_SD, "persistence": 5,
    },
    "calibration": {
        "temp_degree": 3, "strain_form": "atanh", "strain_degree": 3, "ref_temp": 23.0, "margin": 0.05,
    },
    "targets": {"strain_ci95": 27e-6, "temp_ci95": 0.75, "noncontact_ci95": 77e-6, "rel_tol": 0.3},
}

_PROTOCOLS: dict[str, dict[str, Any]] = {
    "tensile_cal": {
        "temperatures": [23.0, 40.0], "cycles_per_temp": 4, "max_stress": 70e6, "points_per_branch": 60,
        "sample_period": 1.0,
    },
    "temp_cal": {"t_min": 25.0, "t_max": 95.0, "cycles": 5, "points_per_ramp": 120, "sample_period": 1.0},
    "noncontact": {
        "temperatures": [23.0, 30.0, 40.0], "cycles_per_temp": 6, "max_stress": 59.5e6, "points_per_branch": 40,
        "sweep_t_min": 15.0, "sweep_t_max": 85.0, "sweep_cycles": 5, "sweep_points_per_ramp": 120,
        "sample_period": 1.0,
    },
    "bend_plasticity": {
        "peak_start": 0.2, "peak_stop": 1.3, "peak_step": 0.01, "points_per_branch": 128, "sample_period": 0.1,
    },
    "fatigue_monitor": {
        "n_coupons": 100, "stress_min": 25e6, "stress_max": 250e6, "sample_every": 10, "frequency": 10.0,
    },
}

_SCENARIO_OVERRIDES: dict[str, dict[str, dict[str, Any]]] = {
    "tensile_cal": {},
    "temp_cal": {},
    "noncontact": {"placement": {"depth": 2.5e-3, "liftoff": 0.5e-3}},
    "bend_plasticity": {
        "coupon": {"kind": "senb", "b": 24e-3, "h": 7e-3, "span": 48e-3},
        "sensor": {"depth_from_surface": 2e-3},
        "placement": {"depth": 2e-3, "liftoff": 0.0},
    },
    "fatigue_monitor": {
        "coupon": {"kind": "senb", "b": 8e-3, "h": 12e-3, "span": 48e-3},
        "sensor": {"depth_from_surface": 2.5e-3},
        "placement": {"depth": 2.5e-3, "liftoff": 0.0},
    },
}


def default_config(scenario: str = "tensile_cal") -> dict[str, dict[str, Any]]:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    cfg = copy.deepcopy(_BASE)
    cfg["scenario"]["name"] = scenario
    for section, values in _SCENARIO_OVERRIDES[scenario].items():
        cfg[section].update(values)
    cfg["protocol"] = copy.deepcopy(_PROTOCOLS[scenario])
    return cfg


def _coerce(text: str, default: Any, where: str) -> Any:
    text = text.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            return [float(v) for v in text.split(",") if v.strip()]
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {text!r} as {type(default).__name__}") from exc


def parse_config_text(text: str, scenario: Optional[str] = None) -> dict[str, dict[str, Any]]:
    """Resolve INI ``text`` on top of the defaults of its scenario."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    name = scenario
    if cp.has_section("scenario") and "name" in cp["scenario"]:
        name = scenario or cp["scenario"]["name"].strip()
    cfg = default_config(name or "tensile_cal")

    for section in cp.sections():
        if section not in cfg:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            if section == "scenario" and key == "name":
                continue
            cfg[section][key] = _coerce(raw, cfg[section][key], f"{section}.{key}")
    return cfg


def load_config(path: "os.PathLike[str] | str", scenario: Optional[str] = None) -> dict[str, dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, scenario)


def canonical_bytes(cfg: dict[str, dict[str, Any]]) -> bytes:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode("utf-8")


def config_hash(cfg: dict[str, dict[str, Any]]) -> str:
    return hashlib.sha256(canonical_bytes(cfg)).hexdigest()


def config_to_text(cfg: dict[str, dict[str, Any]]) -> str:
    """Serialize a resolved config back to INI text accepted by :func:`parse_config_text`."""
    lines = []
    for section, values in cfg.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = format(value, ".17g")
            elif isinstance(value, list):
                text = ", ".join(format(v, ".17g") for v in value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
