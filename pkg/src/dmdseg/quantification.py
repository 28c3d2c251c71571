"""Time-intensity curves: a template projected onto every frame."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .imaging import ImageSequence


@dataclass(frozen=True)
class TimeIntensityCurve:
    values: np.ndarray
    times: np.ndarray
    mask_area: int

    def __len__(self) -> int:
        return self.values.shape[0]


def apply_template(seq: ImageSequence, mask) -> TimeIntensityCurve:
    """Mean intensity inside ``mask`` for every frame."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != seq.shape:
        raise ValidationError(f"mask shape {mask.shape} does not match frame shape {seq.shape}")
    area = int(mask.sum())
    if area == 0:
        raise ValidationError("cannot quantify with an empty mask")
    values = seq.frames[:, mask].sum(axis=1) / area
    return TimeIntensityCurve(values, seq.times, area)


def normalize_curve(curve: TimeIntensityCurve) -> TimeIntensityCurve:
    """Min-max scale the values to [0, 1]; a constant curve becomes zeros."""
    v = np.asarray(curve.values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    out = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    return TimeIntensityCurve(out, curve.times, curve.mask_area)


CURVE_HEADER = ("t_seconds", "mean_intensity")


def write_curve_csv(curve: TimeIntensityCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for t, v in zip(curve.times, curve.values):
            w.writerow([repr(float(t)), repr(float(v))])


def read_curve_csv(path, mask_area: int = 0) -> TimeIntensityCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CURVE_HEADER:
        raise FormatError(f"{path}: expected header {','.join(CURVE_HEADER)}")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=np.float64).reshape(-1, 2)
    except ValueError:
        raise FormatError(f"{path}: malformed curve row") from None
    return TimeIntensityCurve(data[:, 1], data[:, 0], mask_area)
