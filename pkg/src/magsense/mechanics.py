"""
Structural models that turn loads and temperature into strain at the sensor.

Covers uniaxial coupons with Ramberg-Osgood plasticity, three-point bending of
single-edge-notch-bend (SENB) bars, CTE mismatch strain, and Paris-law fatigue
crack growth with ligament compliance amplification.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .errors import InputDomainError


@dataclasses.dataclass(frozen=True)
class CouponSpec:
    """
    Coupon geometry and parent-metal constants.  Defaults describe a 7A77-class
    aluminium SENB bar (8 mm x 12 mm section on a 48 mm span).
    """

    kind: str = "senb"
    b: float = 8e-3
    h: float = 12e-3
    span: float = 48e-3
    e_mod: float = 70e9
    sigma_y: float = 480e6
    ro_n: float = 15.0
    ro_alpha: float = 0.5
    cte: float = 23.6e-6

    def __post_init__(self) -> None:
        if self.kind not in ("uniaxial", "senb"):
            raise ValueError(f"kind invalid: {self.kind}")
        if not self.e_mod > 0:
            raise ValueError(f"e_mod invalid: {self.e_mod}")
        if not self.sigma_y > 0:
            raise ValueError(f"sigma_y invalid: {self.sigma_y}")
        if not self.ro_n > 1:
            raise ValueError(f"ro_n invalid: {self.ro_n}")
        if self.ro_alpha < 0:
            raise ValueError(f"ro_alpha invalid: {self.ro_alpha}")
        if not (self.b > 0 and self.h > 0):
            raise ValueError("section dimensions must be positive")
        if self.kind == "senb" and not self.span > self.h:
            raise ValueError(f"span {self.span} must exceed height {self.h}")


@dataclasses.dataclass(frozen=True)
class SensorPlacement:
    depth_from_surface: float = 2.5e-3
    transfer_eff: float = 1.0

    def __post_init__(self) -> None:
        if self.depth_from_surface < 0:
            raise ValueError(f"depth_from_surface invalid: {self.depth_from_surface}")
        if not 0 < self.transfer_eff <= 1:
            raise ValueError(f"transfer_eff invalid: {self.transfer_eff}")


@dataclasses.dataclass(frozen=True)
class ParisParams:
    """da/dN = c_coef * dK^m_exp above dk_th; dK in Pa*sqrt(m), rate in m/cycle."""

    c_coef: float = 4.1e-32  # fitted to the baseline fatigue-life statistics
    m_exp: float = 3.5
    dk_th: float = 0.8e6
    k_ic: float = 28e6
    a0: float = 50e-6

    def __post_init__(self) -> None:
        if not self.c_coef > 0:
            raise ValueError(f"c_coef invalid: {self.c_coef}")
        if not self.m_exp >= 1:
            raise ValueError(f"m_exp invalid: {self.m_exp}")
        if not self.k_ic > self.dk_th >= 0:
            raise ValueError("need k_ic > dk_th >= 0")
        if self.a0 < 0:
            raise ValueError(f"a0 invalid: {self.a0}")


@dataclasses.dataclass(frozen=True)
class CrackState:
    a: float
    cycle: float


@dataclasses.dataclass(frozen=True)
class CrackGrowthResult:
    history: list[CrackState]
    failure_cycle: Optional[int]
    status: str  # "failed", "ductile", "censored" or "immediate"

    @property
    def censored(self) -> bool:
        return self.status == "censored"

    def crack_at(self, cycles) -> np.ndarray:
        """Crack length interpolated at arbitrary cycle counts."""
        n = np.array([s.cycle for s in self.history])
        a = np.array([s.a for s in self.history])
        return np.interp(cycles, n, a)


def plastic_strain(sigma, spec: CouponSpec):
    sigma = np.asarray(sigma, dtype=float)
    out = spec.ro_alpha * (spec.sigma_y / spec.e_mod) * (np.abs(sigma) / spec.sigma_y) ** spec.ro_n
    return float(out) if out.ndim == 0 else out


def uniaxial_strain(sigma, spec: CouponSpec):
    """Ramberg-Osgood monotonic loading strain."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise InputDomainError("uniaxial_strain expects non-negative stress")
    out = sigma / spec.e_mod + plastic_strain(sigma, spec)
    return float(out) if np.ndim(out) == 0 else out


def bend_outer_stress(f, spec: CouponSpec):
    """Outer-fibre stress of a three-point bend bar under midspan load ``f``."""
    if spec.kind != "senb":
        raise InputDomainError("bend_outer_stress needs a senb coupon")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InputDomainError("load must be non-negative")
    out = 3.0 * f * spec.span / (2.0 * spec.b * spec.h**2)
    return float(out) if out.ndim == 0 else out


def bend_load_for_stress(sigma, spec: CouponSpec):
    """Inverse of :func:`bend_outer_stress`."""
    if spec.kind != "senb":
        raise InputDomainError("bend_load_for_stress needs a senb coupon")
    out = np.asarray(sigma, dtype=float) * 2.0 * spec.b * spec.h**2 / (3.0 * spec.span)
    return float(out) if out.ndim == 0 else out


def strain_at_depth(eps_outer, d: float, spec: CouponSpec):
    """Linear bending strain at depth ``d`` below the outer fibre."""
    if not 0 <= d <= spec.h / 2:
        raise InputDomainError(f"depth {d} outside [0, h/2]")
    out = np.asarray(eps_outer, dtype=float) * (1.0 - 2.0 * d / spec.h)
    return float(out) if out.ndim == 0 else out


def thermal_mismatch_strain(alpha_i: float, alpha_p: float, dt):
    """Elastic strain from the inclusion/parent CTE mismatch over a temperature change ``dt``."""
    out = (alpha_i - alpha_p) * np.asarray(dt, dtype=float)
    return float(out) if out.ndim == 0 else out


def plastic_cycle_path(sigma_max: float, n_steps: int, spec: CouponSpec, sigma_prior_max: float = 0.0):
    """
    Load from zero to ``sigma_max`` and unload elastically back to zero.

    ``sigma_prior_max`` is the highest stress reached in earlier cycles: below
    it reloading is elastic on top of the residual plastic strain, above it the
    Ramberg-Osgood curve is followed.  Returns ``(sigma, eps, branch)`` arrays
    with ``branch`` equal to ``"loading"`` or ``"unloading"``.
    """
    if n_steps < 4:
        raise InputDomainError(f"n_steps must be >= 4, got {n_steps}")
    s_load = np.linspace(0.0, sigma_max, n_steps)
    s_unload = s_load[::-1]

    p_prior = plastic_strain(sigma_prior_max, spec)
    p_peak = plastic_strain(max(sigma_max, sigma_prior_max), spec)
    eps_load = s_load / spec.e_mod + np.maximum(plastic_strain(s_load, spec), p_prior)
    eps_unload = s_unload / spec.e_mod + p_peak

    sigma = np.concatenate([s_load, s_unload])
    eps = np.concatenate([eps_load, eps_unload])
    branch = np.array(["loading"] * n_steps + ["unloading"] * n_steps)
    return sigma, eps, branch


def senb_shape_function(alpha):
    """Srawley's wide-range geometry factor for three-point bending at span/height = 4."""
    alpha = np.asarray(alpha, dtype=float)
    num = 3.0 * np.sqrt(alpha) * (1.99 - alpha * (1.0 - alpha) * (2.15 - 3.93 * alpha + 2.7 * alpha**2))
    den = 2.0 * (1.0 + 2.0 * alpha) * (1.0 - alpha) ** 1.5
    return num / den


def stress_intensity_senb(f, a, spec: CouponSpec):
    """Mode-I stress intensity [Pa*sqrt(m)] of an edge crack of depth ``a``."""
    alpha = np.asarray(a, dtype=float) / spec.h
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise InputDomainError("a/h must lie in (0, 1)")
    out = np.asarray(f, dtype=float) * spec.span / (spec.b * spec.h**1.5) * senb_shape_function(alpha)
    return float(out) if out.ndim == 0 else out


def paris_rate(dk, p: ParisParams):
    dk = np.asarray(dk, dtype=float)
    if np.any(dk < 0):
        raise InputDomainError("dK must be non-negative")
    out = np.where(dk > p.dk_th, p.c_coef * dk**p.m_exp, 0.0)
    return float(out) if out.ndim == 0 else out


def compliance_amplification(a, spec: CouponSpec):
    """Strain multiplier from the loss of ligament section modulus, (h / (h - a))^2."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(a >= spec.h):
        raise InputDomainError("crack length must lie in [0, h)")
    out = (spec.h / (spec.h - a)) ** 2
    return float(out) if out.ndim == 0 else out


KFunction = Callable[[float, float], float]


def grow_crack(spec: CouponSpec, f_min: float, f_max: float, p: ParisParams, step: float = 10.0,
               max_cycles: float = 5e5, k_fn: Optional[KFunction] = None) -> CrackGrowthResult:
    """
    Integrate Paris-law growth under constant-amplitude loading.

    Uses fixed-step classical Runge-Kutta in the cycle count.  The step that
    crosses a termination criterion (K_max >= K_Ic, or a >= 0.8 h) is bisected
    so the reported failure cycle does not depend on the step grid.

    ``k_fn(f, a)`` replaces the SENB stress intensity; it exists so tests can
    freeze the geometry factor.
    """
    if not f_max > f_min >= 0:
        raise InputDomainError("need f_max > f_min >= 0")
    if not p.a0 > 0:
        raise InputDomainError("initial crack length must be positive")
    if k_fn is None:
        scale = spec.span / (spec.b * spec.h**1.5)

        def kfun(f: float, a: float) -> float:
            al = a / spec.h
            g = (3.0 * math.sqrt(al) * (1.99 - al * (1.0 - al) * (2.15 - 3.93 * al + 2.7 * al * al))
                 / (2.0 * (1.0 + 2.0 * al) * (1.0 - al) ** 1.5))
            return f * scale * g
    else:
        kfun = k_fn
    a_cut = 0.8 * spec.h

    def rate(a: float) -> float:
        dk = kfun(f_max, a) - kfun(f_min, a)
        return p.c_coef * dk**p.m_exp if dk > p.dk_th else 0.0

    def done(a: float) -> bool:
        return a >= a_cut or kfun(f_max, a) >= p.k_ic

    def rk4(a: float, dn: float) -> float:
        k1 = rate(a)
        k2 = rate(min(a + 0.5 * dn * k1, a_cut))
        k3 = rate(min(a + 0.5 * dn * k2, a_cut))
        k4 = rate(min(a + dn * k3, a_cut))
        return a + dn * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    a = p.a0
    if done(a):
        return CrackGrowthResult([CrackState(a, 0.0)], 0, "immediate")
    if rate(a) == 0.0:
        return CrackGrowthResult([CrackState(a, 0.0)], None, "censored")

    history = [CrackState(a, 0.0)]
    n = 0.0
    while n < max_cycles:
        dn = min(step, max_cycles - n)
        a_next = rk4(a, dn)
        if done(a_next):
            lo, hi = 0.0, dn
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if done(rk4(a, mid)):
                    hi = mid
                else:
                    lo = mid
            n_fail = n + hi
            a_fail = rk4(a, hi)
            history.append(CrackState(a_fail, n_fail))
            status = "failed" if kfun(f_max, min(a_fail, a_cut)) >= p.k_ic else "ductile"
            return CrackGrowthResult(history, int(round(n_fail)), status)
        if a_next <= a:
            # below threshold: the crack has arrested
            break
        n += dn
        a = a_next
        history.append(CrackState(a, n))
    return CrackGrowthResult(history, None, "censored")


def mechanical_strain(spec: CouponSpec, load: float) -> float:
    """Outer-fibre (senb, ``load`` in N) or gauge (uniaxial, ``load`` in Pa) strain."""
    if spec.kind == "senb":
        sigma = bend_outer_stress(load, spec)
    else:
        sigma = np.asarray(load, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    # compression is mirrored through the odd Ramberg-Osgood law
    return np.sign(sigma) * uniaxial_strain(np.abs(sigma), spec)


def sensor_strain(spec: CouponSpec, placement: SensorPlacement, load, crack=None,
                  dt=0.0, alpha_i: float = 12.0e-6):
    """
    Strain seen by the embedded Galfenol: transferred mechanical strain at the
    sensor depth, amplified by crack compliance, plus CTE mismatch strain.

    For uniaxial coupons ``load`` is the gauge stress in Pa and depth is
    irrelevant; for senb coupons it is the midspan force in N.  ``crack`` is a
    :class:`CrackState` or an array of crack lengths matching ``load``.
    """
    eps_mech = mechanical_strain(spec, load)
    if spec.kind == "senb":
        eps_mech = strain_at_depth(eps_mech, placement.depth_from_surface, spec)
        if crack is not None:
            a = crack.a if isinstance(crack, CrackState) else crack
            eps_mech = eps_mech * compliance_amplification(a, spec)
    elif crack is not None:
        raise InputDomainError("crack states only apply to senb coupons")
    out = placement.transfer_eff * eps_mech + thermal_mismatch_strain(alpha_i, spec.cte, dt)
    return float(out) if np.ndim(out) == 0 else out
