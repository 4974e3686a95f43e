"""Experiment logs: in-memory columns plus the strict CSV format used on disk."""

from __future__ import annotations

import dataclasses
import io
import os
from typing import Optional

import numpy as np
import numpy.typing as npt

from .errors import SchemaError

COLUMNS = (
    "time_s",
    "cycle_id",
    "block_id",
    "load_n",
    "ref_stress_pa",
    "ref_strain",
    "ref_temp_c",
    "l_strain_ch_h",
    "l_temp_ch_h",
)
INT_COLUMNS = ("cycle_id", "block_id")
HEADER = ",".join(COLUMNS)


def fmt(x: float) -> str:
    """Full-precision decimal text; empty for absent (NaN) values."""
    if x != x:
        return ""
    return format(float(x), ".17g")


@dataclasses.dataclass
class Dataset:
    """
    Time-ordered samples.  Absent float values are NaN; ``cycle_id`` and
    ``block_id`` are integers.
    """

    time_s: npt.NDArray[np.float64]
    cycle_id: npt.NDArray[np.int64]
    block_id: npt.NDArray[np.int64]
    load_n: npt.NDArray[np.float64]
    ref_stress_pa: npt.NDArray[np.float64]
    ref_strain: npt.NDArray[np.float64]
    ref_temp_c: npt.NDArray[np.float64]
    l_strain_ch_h: npt.NDArray[np.float64]
    l_temp_ch_h: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        n = len(self.time_s)
        for name in COLUMNS:
            dtype = np.int64 if name in INT_COLUMNS else np.float64
            col = np.asarray(getattr(self, name), dtype=dtype)
            if col.shape != (n,):
                raise SchemaError(f"column {name} has {col.shape[0] if col.ndim else 0} rows, expected {n}")
            setattr(self, name, col)
        if n and np.any(np.diff(self.time_s) < 0):
            raise SchemaError("time_s must be non-decreasing")
        has_l = ~np.isnan(self.l_strain_ch_h) | ~np.isnan(self.l_temp_ch_h)
        if n and not np.all(has_l):
            raise SchemaError(f"row {int(np.argmin(has_l))} carries no inductance reading")

    def __len__(self) -> int:
        return len(self.time_s)

    @classmethod
    def build(cls, n: int, **columns) -> "Dataset":
        """Fill unspecified float columns with NaN and integer columns with 0."""
        unknown = set(columns) - set(COLUMNS)
        if unknown:
            raise SchemaError(f"unknown columns: {sorted(unknown)}")
        full = {}
        for name in COLUMNS:
            if name in columns:
                full[name] = np.broadcast_to(np.asarray(columns[name]), (n,)).copy()
            elif name in INT_COLUMNS:
                full[name] = np.zeros(n, dtype=np.int64)
            else:
                full[name] = np.full(n, np.nan)
        return cls(**full)

    def select(self, mask) -> "Dataset":
        mask = np.asarray(mask)
        return Dataset(**{name: getattr(self, name)[mask] for name in COLUMNS})

    def present(self, *names: str) -> npt.NDArray[np.bool_]:
        """Mask of rows where every named float column holds a value."""
        mask = np.ones(len(self), dtype=bool)
        for name in names:
            mask &= ~np.isnan(getattr(self, name))
        return mask

    @staticmethod
    def concat(parts: list["Dataset"]) -> "Dataset":
        return Dataset(**{name: np.concatenate([getattr(p, name) for p in parts]) for name in COLUMNS})


def to_csv_text(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    cols = [getattr(ds, name) for name in COLUMNS]
    for i in range(len(ds)):
        fields = []
        for name, col in zip(COLUMNS, cols):
            fields.append(str(int(col[i])) if name in INT_COLUMNS else fmt(col[i]))
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def write_csv(ds: Dataset, path: "os.PathLike[str] | str") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(to_csv_text(ds))


def read_csv(path: "os.PathLike[str] | str", required: Optional[tuple[str, ...]] = None) -> Dataset:
    """
    Parse a dataset file.  The header must match :data:`HEADER` exactly;
    ``required`` names columns that must hold at least one value.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0].rstrip("\r") != HEADER:
        got = lines[0].rstrip("\r").split(",") if lines else []
        missing = [c for c in COLUMNS if c not in got]
        extra = [c for c in got if c not in COLUMNS]
        details = []
        if missing:
            details.append(f"missing column(s): {', '.join(missing)}")
        if extra:
            details.append(f"unknown column(s): {', '.join(extra)}")
        raise SchemaError("; ".join(details) or "header does not match the dataset schema")

    rows = [line.rstrip("\r") for line in lines[1:] if line.strip()]
    data: dict[str, list] = {name: [] for name in COLUMNS}
    for lineno, line in enumerate(rows, start=2):
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise SchemaError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(fields)}")
        for name, text in zip(COLUMNS, fields):
            try:
                if name in INT_COLUMNS:
                    data[name].append(int(text))
                else:
                    data[name].append(float(text) if text else np.nan)
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: bad value {text!r} for {name}") from exc
    ds = Dataset(**{name: np.array(vals, dtype=np.int64 if name in INT_COLUMNS else np.float64)
                    for name, vals in data.items()})
    for name in required or ():
        if len(ds) == 0 or np.all(np.isnan(getattr(ds, name))):
            raise SchemaError(f"missing column: {name} holds no values")
    return ds
