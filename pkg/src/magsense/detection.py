"""
Decision layer: plasticity onset from loading/unloading divergence and crack
growth from drift of the normalized inductance, plus lead-time bookkeeping.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np
import numpy.typing as npt

from .errors import DegenerateBaselineError, InconsistencyError, InputDomainError

GRID_POINTS = 128


@dataclasses.dataclass(frozen=True)
class CycleTrace:
    """
    Branch-tagged (stress, inductance) samples of one or more load increments.

    ``increment`` groups samples into load/unload increments with rising peak
    stress; a single monotone cycle has one increment.  Within an increment the
    loading branch rises in stress and the unloading branch falls.
    """

    sigma: npt.NDArray[np.float64]
    l: npt.NDArray[np.float64]
    branch: npt.NDArray[np.str_]
    increment: Optional[npt.NDArray[np.int64]] = None

    def __post_init__(self) -> None:
        n = len(self.sigma)
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        object.__setattr__(self, "l", np.asarray(self.l, dtype=float))
        object.__setattr__(self, "branch", np.asarray(self.branch))
        inc = np.zeros(n, dtype=np.int64) if self.increment is None else np.asarray(self.increment, dtype=np.int64)
        object.__setattr__(self, "increment", inc)
        if not (len(self.l) == len(self.branch) == len(inc) == n):
            raise InputDomainError("trace columns differ in length")
        bad = set(np.unique(self.branch)) - {"loading", "unloading"}
        if bad:
            raise InputDomainError(f"unknown branch tags {sorted(bad)}")
        for k in np.unique(inc):
            for tag, sign in (("loading", 1.0), ("unloading", -1.0)):
                s = self.sigma[(inc == k) & (self.branch == tag)]
                if s.size > 1 and np.any(sign * np.diff(s) < 0):
                    raise InputDomainError(f"{tag} branch of increment {k} is not monotone in stress")

    def branch_of(self, k: int, tag: str) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        sel = (self.increment == k) & (self.branch == tag)
        s, l = self.sigma[sel], self.l[sel]
        order = np.argsort(s, kind="stable")
        return s[order], l[order]


@dataclasses.dataclass(frozen=True)
class CusumConfig:
    k: float = 0.5
    h: float = 14.0
    baseline_window: int = 200
    sign: int = 1

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError(f"k invalid: {self.k}")
        if not self.h > 0:
            raise ValueError(f"h invalid: {self.h}")
        if self.baseline_window < 10:
            raise ValueError(f"baseline_window invalid: {self.baseline_window}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")


@dataclasses.dataclass(frozen=True)
class CusumResult:
    detection_index: Optional[int]
    statistic: npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True)
class MonitorReport:
    detection_cycle: Optional[int]
    failure_cycle: Optional[int]
    lead_time: Optional[int]
    cycles: npt.NDArray[np.float64]
    normalized: npt.NDArray[np.float64]
    statistic: npt.NDArray[np.float64]

    @property
    def normalized_series(self) -> list[tuple[float, float]]:
        return list(zip(self.cycles.tolist(), self.normalized.tolist()))

    @property
    def censored(self) -> bool:
        return self.failure_cycle is None


def normalize_series(l_series) -> npt.NDArray[np.float64]:
    """
    Divide each inductance by the first one.  Accepts a plain sequence of
    inductances or ``(cycle, inductance)`` pairs; returns values (or pairs) in
    the same layout.
    """
    arr = np.asarray(l_series, dtype=float)
    if arr.size == 0:
        raise InputDomainError("empty series")
    values = arr[:, 1] if arr.ndim == 2 else arr
    if not values[0] > 0:
        raise InputDomainError(f"first inductance must be positive, got {values[0]}")
    out = values / values[0]
    out[0] = 1.0
    if arr.ndim == 2:
        return np.column_stack([arr[:, 0], out])
    return out


def _diverged(sep: npt.NDArray[np.float64], tol: float, persistence: int) -> bool:
    run = 0
    for exceeds in np.abs(sep) > tol:
        run = run + 1 if exceeds else 0
        if run >= persistence:
            return True
    return False


def plasticity_onset(trace: CycleTrace, tol: float, persistence: int = 5) -> Optional[float]:
    """
    Peak stress of the first increment whose unloading path departs from the
    virgin loading path.

    The reference is the loading branch of the first increment, which must be
    elastic.  Each increment's unloading branch is interpolated with the
    reference on a common grid of 128 stresses; the increment counts as
    diverged when the difference exceeds ``tol`` on ``persistence`` consecutive
    grid points.  With a single increment this compares that cycle's own
    loading and unloading branches and returns its peak stress if they part.
    """
    if not tol > 0:
        raise InputDomainError(f"tol must be positive, got {tol}")
    increments = np.unique(trace.increment)
    ref_s, ref_l = trace.branch_of(int(increments[0]), "loading")
    if ref_s.size < 2:
        raise InputDomainError("reference loading branch has fewer than two samples")
    for k in increments:
        un_s, un_l = trace.branch_of(int(k), "unloading")
        if un_s.size < 2:
            raise InputDomainError(f"increment {k} has no unloading branch")
        lo, hi = max(ref_s[0], un_s[0]), min(ref_s[-1], un_s[-1])
        if not hi > lo:
            raise InputDomainError(f"branches of increment {k} share no stress interval")
        grid = np.linspace(lo, hi, GRID_POINTS)
        sep = np.interp(grid, un_s, un_l) - np.interp(grid, ref_s, ref_l)
        if _diverged(sep, tol, persistence):
            load_s, _ = trace.branch_of(int(k), "loading")
            return float(max(load_s.max(initial=-np.inf), un_s.max()))
    return None


def cusum_detect(series, cfg: CusumConfig) -> CusumResult:
    """
    One-sided CUSUM on a normalized series, standardized by the mean and SD of
    the first ``cfg.baseline_window`` samples.  The statistic is zero over the
    baseline; the first index where it exceeds ``cfg.h`` is the detection.
    """
    x = np.asarray(series, dtype=float)
    if x.size <= cfg.baseline_window:
        raise InputDomainError(f"series length {x.size} must exceed baseline window {cfg.baseline_window}")
    base = x[: cfg.baseline_window]
    mean = float(base.mean())
    sd = float(base.std(ddof=1))
    stat = np.zeros(x.size)
    if sd == 0.0:
        if np.all(x == x[0]):
            return CusumResult(None, stat)
        raise DegenerateBaselineError("baseline has zero spread but the series varies")

    z = cfg.sign * (x - mean) / sd - cfg.k
    s = 0.0
    detection = None
    for i in range(cfg.baseline_window, x.size):
        s = max(0.0, s + z[i])
        stat[i] = s
        if detection is None and s > cfg.h:
            detection = i
    return CusumResult(detection, stat)


def lead_time(detection_cycle, failure_cycle):
    if detection_cycle is None or failure_cycle is None:
        return None
    if detection_cycle > failure_cycle:
        raise InconsistencyError(f"detection at {detection_cycle} after failure at {failure_cycle}")
    return failure_cycle - detection_cycle


def monitor_series(cycles, l_series, cfg: CusumConfig, failure_cycle: Optional[int] = None) -> MonitorReport:
    """Normalize, run CUSUM and convert the alarm index to a cycle count."""
    cycles = np.asarray(cycles, dtype=float)
    norm = normalize_series(l_series)
    res = cusum_detect(norm, cfg)
    detection = None if res.detection_index is None else int(math.floor(cycles[res.detection_index]))
    if detection is not None and failure_cycle is not None and detection > failure_cycle:
        detection = None
    return MonitorReport(detection, failure_cycle, lead_time(detection, failure_cycle), cycles, norm, res.statistic)
