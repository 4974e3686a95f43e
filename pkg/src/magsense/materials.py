"""
Constitutive models for the magneto-responsive inclusions.

Galfenol (FeGa) carries the strain signal through a stress-dependent
susceptibility; Monel (NiCu) carries the temperature signal through the
collapse of its susceptibility near the Curie point.  Both are reduced to
axial, scalar forms because the rods are always aligned with the coil axis.

Units are SI except temperatures, which are in degrees Celsius.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Union

import numpy as np
import numpy.typing as npt

from .errors import InputDomainError, OutOfModelError

MU_0 = 1.25663706212e-6  # vacuum permeability [H/m]

# tanh(x) = +/-0.8 at x = +/-atanh(0.8); used to map a 10%..90% swing onto a strain span
_SWING_10_90 = 2.0 * math.atanh(0.8)

ArrayLike = Union[float, npt.ArrayLike]


@dataclasses.dataclass(frozen=True)
class GalfenolParams:
    """
    Magnetoelastic inclusion.  The susceptibility follows

        chi(eps) = chi0 + delta_chi * tanh(eps / eps_sat)

    ``sensing_range`` is the nominal datasheet span of sensible strain.  It is
    kept as metadata; :meth:`from_sensing_range` derives ``eps_sat`` from it
    when a part should saturate exactly over that span.
    """

    chi0: float = 100.0
    delta_chi: float = 50.0
    eps_sat: float = 2.0e-3
    sensing_range: float = 400e-6
    curie_temp: float = 700.0
    cte: float = 12.0e-6
    m_sat: float = 1.3e6
    h_c: float = 100.0

    def __post_init__(self) -> None:
        if not self.eps_sat > 0:
            raise ValueError(f"eps_sat invalid: {self.eps_sat}")
        if not abs(self.delta_chi) > 0:
            raise ValueError(f"delta_chi invalid: {self.delta_chi}")
        if not self.curie_temp > 100.0:
            raise ValueError(f"curie_temp invalid: {self.curie_temp}")
        if not self.sensing_range > 0:
            raise ValueError(f"sensing_range invalid: {self.sensing_range}")
        if self.h_c < 0:
            raise ValueError(f"h_c invalid: {self.h_c}")
        if self.chi0 - abs(self.delta_chi) < 0:
            raise ValueError("chi0 - |delta_chi| must stay non-negative")

    @classmethod
    def from_sensing_range(cls, sensing_range: float, **kwargs) -> "GalfenolParams":
        """Build parameters whose 10%..90% susceptibility swing spans ``sensing_range``."""
        return cls(sensing_range=sensing_range, eps_sat=sensing_range / _SWING_10_90, **kwargs)


@dataclasses.dataclass(frozen=True)
class MonelParams:
    """Thermomagnetic inclusion with chi(T) = chi0 * (1 - T/Tc)^beta below Tc."""

    chi0: float = 100.0
    curie_temp: float = 100.0
    beta: float = 0.36
    cte: float = 13.9e-6
    m_sat: float = 2.4e5
    h_c: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError(f"beta invalid: {self.beta}")
        if not self.curie_temp > 0:
            raise ValueError(f"curie_temp invalid: {self.curie_temp}")
        if self.h_c < 0:
            raise ValueError(f"h_c invalid: {self.h_c}")
        if self.chi0 < 0:
            raise ValueError(f"chi0 invalid: {self.chi0}")


Material = Union[GalfenolParams, MonelParams]


@dataclasses.dataclass(frozen=True)
class PiezoCoeffs1D:
    """
    Axial small-signal piezomagnetic coefficients.

        Symbol      Description                         Unit
        mu_t        permeability at constant stress     H/m
        d_star_h    flux density per unit stress        T/Pa
        d_t         strain per unit field               m/A
        s_h         compliance at constant field        1/Pa

    Thermodynamic (Maxwell) symmetry requires ``d_star_h == d_t`` in SI units.
    """

    mu_t: float
    d_star_h: float
    d_t: float
    s_h: float

    def __post_init__(self) -> None:
        if not self.mu_t > 0:
            raise ValueError(f"mu_t invalid: {self.mu_t}")
        if not self.s_h > 0:
            raise ValueError(f"s_h invalid: {self.s_h}")
        if not math.isclose(self.d_star_h, self.d_t, rel_tol=1e-9, abs_tol=0.0):
            raise ValueError(f"Maxwell symmetry violated: d_star_h={self.d_star_h} d_t={self.d_t}")


@dataclasses.dataclass(frozen=True)
class VsmSweep:
    """A full M(H) loop: +h_max -> -h_max -> +h_max, one row per field sample."""

    temperature: float
    h_field: npt.NDArray[np.float64]
    magnetization: npt.NDArray[np.float64]
    h_max: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.h_field.tolist(), self.magnetization.tolist()))


def tesla_to_amp_per_m(b: float) -> float:
    """Convert a magnetometer field setting given in tesla (mu0*H) to A/m."""
    return b / MU_0


def piezomagnetic_response(h: ArrayLike, sigma: ArrayLike, c: PiezoCoeffs1D):
    """Return ``(b, s)``: flux density [T] and strain for field ``h`` [A/m] and stress ``sigma`` [Pa]."""
    h = np.asarray(h, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(sigma))):
        raise InputDomainError("piezomagnetic_response requires finite inputs")
    b = c.mu_t * h + c.d_star_h * sigma
    s = c.d_t * h + c.s_h * sigma
    if b.ndim == 0:
        return float(b), float(s)
    return b, s


def galfenol_susceptibility(eps: ArrayLike, temp: ArrayLike, p: GalfenolParams):
    """
    Relative susceptibility of Galfenol at axial strain ``eps``.

    The value does not depend on temperature below the Curie point; ``temp`` is
    only checked against it.
    """
    t = np.asarray(temp, dtype=float)
    if np.any(t >= p.curie_temp):
        raise OutOfModelError(f"temperature {np.max(t)} degC at or above Galfenol Curie point {p.curie_temp}")
    chi = p.chi0 + p.delta_chi * np.tanh(np.asarray(eps, dtype=float) / p.eps_sat)
    return float(chi) if np.ndim(chi) == 0 else chi


def monel_susceptibility(temp: ArrayLike, p: MonelParams):
    """Critical power-law susceptibility; identically zero at and above the Curie point."""
    t = np.asarray(temp, dtype=float)
    reduced = np.clip(1.0 - t / p.curie_temp, 0.0, None)
    chi = p.chi0 * reduced**p.beta
    return float(chi) if np.ndim(chi) == 0 else chi


def _demag_series(e2: float) -> float:
    # (1 - e^2) * sum e^(2k) / (2k + 3); converges quickly for small eccentricity
    total, term, k = 0.0, 1.0, 0
    while True:
        contrib = term / (2 * k + 3)
        total += contrib
        if contrib < 1e-18:
            break
        term *= e2
        k += 1
    return (1.0 - e2) * total


def demag_factor_rod(aspect: float) -> float:
    """
    Axial demagnetizing factor of a prolate ellipsoid of revolution.

    ``aspect`` is the length-to-diameter ratio; ``1`` is a sphere.
    """
    m = float(aspect)
    if not m >= 1.0:
        raise InputDomainError(f"aspect must be >= 1 (oblate bodies unsupported), got {aspect}")
    e2 = 1.0 - 1.0 / (m * m)
    if e2 < 0.1:
        return _demag_series(e2)
    root = math.sqrt(m * m - 1.0)
    return (m * math.acosh(m) / root - 1.0) / (m * m - 1.0)


def apparent_susceptibility(chi: ArrayLike, n: float):
    """Shape-corrected susceptibility chi / (1 + n*chi)."""
    chi = np.asarray(chi, dtype=float)
    out = chi / (1.0 + n * chi)
    return float(out) if out.ndim == 0 else out


def _loop_state(material: Material, temp: float, eps: float) -> tuple[float, float]:
    """Susceptibility and effective saturation magnetization at ``temp``."""
    if isinstance(material, GalfenolParams):
        return galfenol_susceptibility(eps, temp, material), material.m_sat
    if isinstance(material, MonelParams):
        reduced = max(0.0, 1.0 - temp / material.curie_temp)
        return monel_susceptibility(temp, material), material.m_sat * reduced**material.beta
    raise TypeError(f"unsupported material {type(material).__name__}")


def synth_vsm_loop(material: Material, temp: float, h_max: float, n_points: int, eps: float = 0.0) -> VsmSweep:
    """
    Synthesize a magnetometer loop from the anhysteretic tanh law with a
    constant coercive offset.  The descending branch crosses zero at -h_c and
    the ascending branch at +h_c.
    """
    if n_points < 16:
        raise InputDomainError(f"n_points must be >= 16, got {n_points}")
    if not h_max > 0:
        raise InputDomainError(f"h_max must be positive, got {h_max}")

    chi, m_eff = _loop_state(material, temp, eps)
    n_down = n_points // 2 + 1
    n_up = n_points - n_down + 1
    h_down = np.linspace(h_max, -h_max, n_down)
    h_up = np.linspace(-h_max, h_max, n_up)[1:]
    h = np.concatenate([h_down, h_up])
    offset = np.concatenate([np.full(n_down, material.h_c), np.full(n_up - 1, -material.h_c)])

    if m_eff == 0.0 or chi == 0.0:
        mag = np.zeros_like(h)
    else:
        mag = m_eff * np.tanh(chi * (h + offset) / m_eff)
    return VsmSweep(temperature=temp, h_field=h, magnetization=mag, h_max=h_max)
