"""Segmentation and curve scores against three expert annotations.

The reference for expert i is the agreement of the other two,
``G_i = e_j & e_k``.  Experts are scored as ``E_i = J(e_i, G_i)``, the
automatic result as ``D_i = J(d, G_i)`` and their mean.  A blind baseline
is the filled bounding box around all annotations.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .imaging import ImageSequence
from .quantification import TimeIntensityCurve, apply_template, normalize_curve


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValidationError(f"mask dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def jaccard(a, b) -> float:
    """|A & B| / |A | B|; two empty masks are identical and score 1."""
    a, b = _pair(a, b)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


@dataclass(frozen=True)
class GroundTruthSet:
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray

    def __iter__(self):
        return iter((self.g1, self.g2, self.g3))


def build_ground_truths(e1, e2, e3) -> GroundTruthSet:
    e1, e2 = _pair(e1, e2)
    e1, e3 = _pair(e1, e3)
    return GroundTruthSet(e2 & e3, e1 & e3, e1 & e2)


def score_expert(e_i, g_i) -> float:
    return jaccard(e_i, g_i)


def score_dmd(d, gts: GroundTruthSet) -> tuple[float, float, float, float]:
    """(D_1, D_2, D_3, mean)."""
    d1, d2, d3 = (jaccard(d, g) for g in gts)
    return d1, d2, d3, (d1 + d2 + d3) / 3


def bounding_box_mask(e1, e2, e3) -> np.ndarray:
    e1, e2 = _pair(e1, e2)
    e1, e3 = _pair(e1, e3)
    union = e1 | e2 | e3
    if not union.any():
        raise ValidationError("bounding box needs at least one annotated pixel")
    rows = np.flatnonzero(union.any(axis=1))
    cols = np.flatnonzero(union.any(axis=0))
    box = np.zeros_like(union)
    box[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1] = True
    return box


def mse(curve_a: TimeIntensityCurve, curve_b: TimeIntensityCurve) -> float:
    """Mean squared difference of two curves; callers normalize first."""
    a = np.asarray(curve_a.values, dtype=np.float64)
    b = np.asarray(curve_b.values, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"curve length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.mean((a - b) ** 2))


@dataclass
class EvaluationReport:
    label: str
    d_scores: tuple[float, float, float]
    d_mean: float
    e_scores: tuple[float, float, float]
    bbox_scores: tuple[float, float, float]
    mse_dmd: tuple[float, float, float] = (math.nan,) * 3
    mse_experts: tuple[float, float, float] = (math.nan,) * 3
    mse_bbox: tuple[float, float, float] = (math.nan,) * 3
    notes: list[str] = field(default_factory=list)

    @property
    def bbox_mean(self) -> float:
        return sum(self.bbox_scores) / 3

    @property
    def mse_dmd_mean(self) -> float:
        return _nanmean(self.mse_dmd)

    @property
    def mse_bbox_mean(self) -> float:
        return _nanmean(self.mse_bbox)

    def row(self) -> dict[str, object]:
        d1, d2, d3 = self.d_scores
        e1, e2, e3 = self.e_scores
        m1, m2, m3 = self.mse_experts
        b1, b2, b3 = self.mse_bbox
        return {
            "dataset": self.label,
            "D1": d1, "D2": d2, "D3": d3, "avgDMD": self.d_mean,
            "E1": e1, "E2": e2, "E3": e3,
            "Bbox": self.bbox_mean,
            "MSE_dmd": self.mse_dmd_mean,
            "MSE_e1": m1, "MSE_e2": m2, "MSE_e3": m3,
            "MSE_bbox": self.mse_bbox_mean,
            "MSE_bbox_G1": b1, "MSE_bbox_G2": b2, "MSE_bbox_G3": b3,
        }


REPORT_COLUMNS = (
    "dataset", "D1", "D2", "D3", "avgDMD", "E1", "E2", "E3", "Bbox",
    "MSE_dmd", "MSE_e1", "MSE_e2", "MSE_e3", "MSE_bbox", "MSE_bbox_G1", "MSE_bbox_G2", "MSE_bbox_G3",
)


def _nanmean(values) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return sum(finite) / len(finite) if finite else math.nan


def _normalized_curve(seq: ImageSequence, mask) -> TimeIntensityCurve | None:
    if not np.any(mask):
        return None
    return normalize_curve(apply_template(seq, mask))


def evaluate(d, e1, e2, e3, sequence: ImageSequence | None = None, label: str = "dataset") -> EvaluationReport:
    """Score a DMD template, the experts and the bounding-box baseline.

    With a sequence, curves inside every mask are normalized to [0, 1] and
    compared to the curve of each G_i; an empty G_i yields NaN entries.
    The DMD and bounding-box MSE are reported per G_i and averaged.
    """
    d, e1 = _pair(d, e1)
    _, e2 = _pair(e1, e2)
    _, e3 = _pair(e1, e3)
    experts = (e1, e2, e3)
    gts = build_ground_truths(*experts)
    d1, d2, d3, dm = score_dmd(d, gts)
    e_scores = tuple(score_expert(e, g) for e, g in zip(experts, gts))
    box = bounding_box_mask(*experts)
    bbox_scores = tuple(jaccard(box, g) for g in gts)
    report = EvaluationReport(label, (d1, d2, d3), dm, e_scores, bbox_scores)

    if sequence is not None:
        g_curves = []
        for i, g in enumerate(gts, start=1):
            c = _normalized_curve(sequence, g)
            if c is None:
                report.notes.append(f"G{i} is empty; curve errors against it are undefined")
            g_curves.append(c)
        d_curve = _normalized_curve(sequence, d)
        box_curve = _normalized_curve(sequence, box)
        e_curves = [_normalized_curve(sequence, e) for e in experts]

        def err(a, b):
            return math.nan if a is None or b is None else mse(a, b)

        report.mse_dmd = tuple(err(d_curve, g) for g in g_curves)
        report.mse_bbox = tuple(err(box_curve, g) for g in g_curves)
        report.mse_experts = tuple(err(e, g) for e, g in zip(e_curves, g_curves))
    return report


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rep in reports:
            w.writerow({k: (v if isinstance(v, str) else repr(float(v))) for k, v in rep.row().items()})


def format_table(reports) -> str:
    """Fixed-width text rendering of report rows."""
    cols = REPORT_COLUMNS
    rows = [[r.row()[c] for c in cols] for r in reports]
    cells = [list(cols)] + [[v if isinstance(v, str) else f"{v:.4f}" for v in row] for row in rows]
    widths = [max(len(str(row[i])) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(str(v).rjust(wd) for v, wd in zip(row, widths)) for row in cells)
