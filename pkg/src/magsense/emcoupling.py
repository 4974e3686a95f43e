"""
Coupling between a surface AC coil and an embedded rod inclusion.

The coil is collapsed to one effective loop at its midplane and the inclusion
is treated as a small magnetic perturbation sitting on the coil axis.  By
reciprocity the inductance shift is

    dL = mu0 * V * chi_app * (H/I)^2

with H/I the on-axis field per unit drive current at the inclusion.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Union

import numpy as np
import numpy.typing as npt

from .errors import InputDomainError
from .materials import MU_0, GalfenolParams, MonelParams, demag_factor_rod

# Conductivity of a 7xxx aluminium alloy, used only for the optional skin-depth attenuation.
AL_CONDUCTIVITY = 1.9e7  # S/m


@dataclasses.dataclass(frozen=True)
class CoilSpec:
    outer_diameter: float = 11e-3
    height: float = 1e-3
    turns: int = 40
    nominal_inductance: float = 31.8e-6
    frequency: float = 1000.0
    drive_voltage: float = 1.0
    drive_current: float = 10e-3

    def __post_init__(self) -> None:
        for name in ("outer_diameter", "height", "nominal_inductance", "frequency"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} invalid: {value}")
        if not self.turns > 0:
            raise ValueError(f"turns invalid: {self.turns}")

    @property
    def radius(self) -> float:
        return self.outer_diameter / 2.0


@dataclasses.dataclass(frozen=True)
class InclusionSpec:
    """
    A rod inclusion.  Galfenol bars have a square ``width`` x ``width`` section,
    Monel wire a round section of diameter ``width``.
    """

    material: Union[GalfenolParams, MonelParams]
    length: float = 5e-3
    width: float = 0.5e-3
    section: str = ""

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise ValueError("inclusion dimensions must be positive")
        if not self.section:
            default = "square" if isinstance(self.material, GalfenolParams) else "round"
            object.__setattr__(self, "section", default)
        if self.section not in ("square", "round"):
            raise ValueError(f"section invalid: {self.section}")

    @property
    def volume(self) -> float:
        if self.section == "square":
            return self.length * self.width**2
        return self.length * math.pi * self.width**2 / 4.0

    @property
    def aspect(self) -> float:
        return max(1.0, self.length / self.width)

    @property
    def demag_n(self) -> float:
        return demag_factor_rod(self.aspect)


@dataclasses.dataclass(frozen=True)
class PlacementSpec:
    depth: float = 2.5e-3
    liftoff: float = 0.5e-3
    skin_effect: bool = False
    conductivity: float = AL_CONDUCTIVITY

    def __post_init__(self) -> None:
        if self.depth < 0 or self.liftoff < 0:
            raise ValueError(f"placement invalid: depth={self.depth} liftoff={self.liftoff}")


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    gaussian_sd: float = 0.0
    quant_step: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gaussian_sd < 0 or self.quant_step < 0:
            raise ValueError("noise magnitudes must be non-negative")


@dataclasses.dataclass(frozen=True)
class ChannelReading:
    time: float
    frequency: float
    inductance: float

    def __post_init__(self) -> None:
        if not self.inductance > 0:
            raise ValueError(f"inductance must be positive, got {self.inductance}")


def coil_axis_field_per_amp(coil: CoilSpec, z):
    """On-axis field of the effective loop per ampere of drive current [(A/m)/A]."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise InputDomainError("axial distance must be non-negative")
    a = coil.radius
    out = coil.turns * a * a / (2.0 * (a * a + z * z) ** 1.5)
    return float(out) if out.ndim == 0 else out


def effective_distance(coil: CoilSpec, place: PlacementSpec) -> float:
    return place.liftoff + place.depth + coil.height / 2.0


def skin_depth(frequency: float, conductivity: float = AL_CONDUCTIVITY) -> float:
    return 1.0 / math.sqrt(math.pi * frequency * MU_0 * conductivity)


def coupling_gain(coil: CoilSpec, inc: InclusionSpec, place: PlacementSpec) -> float:
    """Inductance shift per unit apparent susceptibility [H]."""
    h = coil_axis_field_per_amp(coil, effective_distance(coil, place))
    gain = MU_0 * inc.volume * h * h
    if place.skin_effect:
        gain *= math.exp(-place.depth / skin_depth(coil.frequency, place.conductivity))
    return gain


def inductance_shift(coil: CoilSpec, inc: InclusionSpec, place: PlacementSpec, chi_app):
    """Inductance change caused by an inclusion of apparent susceptibility ``chi_app``."""
    chi_app = np.asarray(chi_app, dtype=float)
    if np.any(chi_app < 0):
        raise InputDomainError("chi_app must be non-negative")
    out = coupling_gain(coil, inc, place) * chi_app
    return float(out) if out.ndim == 0 else out


def _quantize(x, step: float):
    if step <= 0:
        return x
    return np.round(np.asarray(x) / step) * step


def read_channel(l0: float, dl: float, noise: NoiseModel, rng: np.random.Generator,
                 time: float = 0.0, frequency: float = 1000.0) -> ChannelReading:
    """One simulated LCR-meter inductance reading."""
    if not l0 > 0:
        raise InputDomainError(f"l0 must be positive, got {l0}")
    value = l0 + dl
    if noise.gaussian_sd > 0:
        value += noise.gaussian_sd * rng.standard_normal()
    return ChannelReading(time=time, frequency=frequency, inductance=float(_quantize(value, noise.quant_step)))


def read_channels(l0: float, dl: npt.ArrayLike, noise: NoiseModel, rng: np.random.Generator) -> npt.NDArray[np.float64]:
    """Vectorized :func:`read_channel`; returns only the inductance values."""
    if not l0 > 0:
        raise InputDomainError(f"l0 must be positive, got {l0}")
    value = l0 + np.asarray(dl, dtype=float)
    if noise.gaussian_sd > 0:
        value = value + noise.gaussian_sd * rng.standard_normal(value.shape)
    return np.asarray(_quantize(value, noise.quant_step), dtype=float)


def crosstalk_inject(reading_self, dl_other, df: float, kappa0: float, bw: float):
    """Add the Lorentzian-attenuated share of a neighbouring channel's shift."""
    if not bw > 0:
        raise InputDomainError(f"bw must be positive, got {bw}")
    if not 0.0 <= kappa0 <= 1.0:
        raise InputDomainError(f"kappa0 must lie in [0, 1], got {kappa0}")
    return reading_self + dl_other * kappa0 / (1.0 + (df / bw) ** 2)
