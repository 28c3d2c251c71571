"""From a mode image to a binary template.

normalize to [0, 1] -> Otsu threshold -> strict binarization ->
connected components -> largest component(s).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptySegmentationError, ValidationError

N_BINS = 256


@dataclass(frozen=True)
class LabeledComponents:
    """Component labels in raster first-encounter order; ``areas[k - 1]`` is the size of label k."""

    labels: np.ndarray
    areas: np.ndarray

    @property
    def count(self) -> int:
        return int(self.areas.shape[0])


@dataclass(frozen=True)
class Segmentation:
    normalized: np.ndarray
    threshold: float
    binary: np.ndarray
    components: LabeledComponents
    template: np.ndarray


def normalize01(img) -> np.ndarray:
    """Affine map to [0, 1]; a constant image maps to zeros."""
    img = np.asarray(img, dtype=np.float64)
    if img.size == 0:
        return img.copy()
    if not np.all(np.isfinite(img)):
        raise ValidationError("image contains non-finite values")
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def histogram_bins(img) -> np.ndarray:
    """Bin index 0..255 of each pixel; bin b holds values in (b/256, (b+1)/256], bin 0 also holds 0.

    With this convention "value <= (t+1)/256" and "bin <= t" coincide, so a
    threshold placed on a bin edge and the strict ``>`` of :func:`binarize`
    agree pixel for pixel.
    """
    img = np.asarray(img, dtype=np.float64)
    return np.clip(np.ceil(img * N_BINS).astype(np.int64) - 1, 0, N_BINS - 1)


def otsu_from_histogram(hist) -> int | None:
    """Index t of the best split (classes ``<= t`` and ``> t``), or None when no split separates anything.

    Between-class variance is compared exactly in integer arithmetic as
    ``(s0*n1 - s1*n0)**2 / (n0*n1)``; the lowest t wins ties.
    """
    counts = [int(c) for c in hist]
    total = sum(counts)
    grand = sum(b * c for b, c in enumerate(counts))
    best_t, best_num, best_den = None, 0, 1
    n0 = s0 = 0
    for t in range(len(counts) - 1):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (s0 * n1 - (grand - s0) * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def otsu_threshold(img) -> float:
    """Otsu threshold of a [0, 1] image over 256 bins, returned as the upper edge of the last background bin.

    An image with a single occupied bin has no separating split; the
    threshold is then 0.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.size and (img.min() < 0 or img.max() > 1):
        raise ValidationError("otsu_threshold expects an image normalized to [0, 1]")
    hist = np.bincount(histogram_bins(img).ravel(), minlength=N_BINS)
    t = otsu_from_histogram(hist)
    if t is None:
        return 0.0
    return (t + 1) / N_BINS


def binarize(img, threshold: float) -> np.ndarray:
    """Foreground where the pixel is strictly greater than ``threshold``."""
    return np.asarray(img) > threshold


def connected_components(mask, connectivity: int = 8) -> LabeledComponents:
    if connectivity not in (4, 8):
        raise ValidationError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    labels, count = kernels.label(mask, connectivity)
    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    labels.setflags(write=False)
    return LabeledComponents(labels, areas)


def largest_component(lc: LabeledComponents, top_k: int = 1) -> np.ndarray:
    """Mask of the ``top_k`` largest components (area ties go to the lower label)."""
    if top_k < 1:
        raise ValidationError(f"top_k must be at least 1, got {top_k}")
    if lc.count == 0:
        raise EmptySegmentationError("empty segmentation: no foreground components")
    # stable sort on -area keeps raster order among equal areas
    order = np.argsort(-lc.areas, kind="stable")[:top_k] + 1
    return np.isin(lc.labels, order)


def parse_threshold(spec) -> str | float:
    """``"otsu"`` or ``"fixed:<v>"`` (also a bare number) -> "otsu" or a float in [0, 1]."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = float(spec)
    else:
        text = str(spec).strip().lower()
        if text == "otsu":
            return "otsu"
        if text.startswith("fixed:"):
            text = text[len("fixed:"):]
        try:
            value = float(text)
        except ValueError:
            raise ValidationError(f"threshold must be 'otsu' or 'fixed:<value>', got {spec!r}") from None
    if not 0 <= value <= 1:
        raise ValidationError(f"fixed threshold must lie in [0, 1], got {value}")
    return value


def segment_steps(img, connectivity: int = 8, top_k: int = 1, threshold="otsu") -> Segmentation:
    """Run every stage and keep the intermediates."""
    norm = normalize01(img)
    mode = parse_threshold(threshold)
    thr = otsu_threshold(norm) if mode == "otsu" else mode
    binary = binarize(norm, thr)
    lc = connected_components(binary, connectivity)
    template = largest_component(lc, top_k)
    return Segmentation(norm, thr, binary, lc, template)


def segment(img, connectivity: int = 8, top_k: int = 1, threshold="otsu") -> np.ndarray:
    """Binary template of the dominant bright region of a mode image."""
    return segment_steps(img, connectivity, top_k, threshold).template
