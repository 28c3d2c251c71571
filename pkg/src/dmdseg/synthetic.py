"""Synthetic phantom with kidney, liver and background dynamics.

Every frame is a piecewise-constant composite::

    frame[t] = kidney(t) * K + liver_weight * liver(t) * L + noise

where K and L are disjoint region masks, ``kidney`` mixes a normalized
Poisson bump with a slow logarithmic rise, ``liver`` is a sigmoid, and the
background is i.i.d. Gaussian noise drawn from a seeded PCG64 generator.
The default geometry places two kidney ellipses low in the image and one
wide liver ellipse near the top; ``simple=True`` uses a single kidney.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .imaging import ImageSequence, save_sequence, write_mask
from .quantification import TimeIntensityCurve, write_curve_csv

RNG_ALGORITHM = "numpy.random.Generator(PCG64).normal"

# 16-bit storage of phantom frames: raw = round(x * SCALE + OFFSET)
FRAME_INTENSITY_OFFSET = 10000.0
FRAME_INTENSITY_SCALE = 20000.0


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse in pixel coordinates (row = y, column = x)."""

    cy: float
    cx: float
    ry: float
    rx: float

    def mask(self, height: int, width: int) -> np.ndarray:
        yy, xx = np.mgrid[0:height, 0:width]
        return ((yy - self.cy) / self.ry) ** 2 + ((xx - self.cx) / self.rx) ** 2 <= 1.0

    def inside(self, height: int, width: int) -> bool:
        return (self.ry > 0 and self.rx > 0 and self.cy - self.ry >= 0 and self.cx - self.rx >= 0
                and self.cy + self.ry <= height - 1 and self.cx + self.rx <= width - 1)


@dataclass(frozen=True)
class Rect:
    top: int
    left: int
    height: int
    width: int

    def mask(self, height: int, width: int) -> np.ndarray:
        m = np.zeros((height, width), dtype=bool)
        m[self.top:self.top + self.height, self.left:self.left + self.width] = True
        return m

    def inside(self, height: int, width: int) -> bool:
        return (self.height > 0 and self.width > 0 and self.top >= 0 and self.left >= 0
                and self.top + self.height <= height and self.left + self.width <= width)


def default_kidneys(width: int, height: int, simple: bool = False) -> tuple[Ellipse, ...]:
    if simple:
        return (Ellipse(0.62 * height, 0.32 * width, 0.17 * height, 0.125 * width),)
    return (
        Ellipse(0.65 * height, 0.25 * width, 0.17 * height, 0.11 * width),
        Ellipse(0.65 * height, 0.73 * width, 0.17 * height, 0.11 * width),
    )


def default_liver(width: int, height: int) -> tuple[Ellipse, ...]:
    return (Ellipse(0.22 * height, 0.5 * width, 0.11 * height, 0.28 * width),)


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 64
    height: int = 64
    frames: int = 100
    seed: int = 0
    noise_sigma: float = 0.05
    delta_t: float = 1.0
    poisson_rate: float = 15.0
    poisson_weight: float = 0.7
    log_weight: float = 0.3
    sigmoid_center: float | None = None
    sigmoid_scale: float | None = None
    # liver intensity relative to the unit sigmoid; keeps the kidney the strongest transient
    liver_weight: float = 0.3
    simple: bool = False
    kidney_regions: tuple = field(default=None)
    liver_regions: tuple = field(default=None)

    def __post_init__(self):
        if self.sigmoid_center is None:
            object.__setattr__(self, "sigmoid_center", self.frames / 2)
        if self.sigmoid_scale is None:
            object.__setattr__(self, "sigmoid_scale", self.frames / 12)
        if self.kidney_regions is None:
            object.__setattr__(self, "kidney_regions", default_kidneys(self.width, self.height, self.simple))
        if self.liver_regions is None:
            object.__setattr__(self, "liver_regions", default_liver(self.width, self.height))
        object.__setattr__(self, "kidney_regions", tuple(self.kidney_regions))
        object.__setattr__(self, "liver_regions", tuple(self.liver_regions))

    def validate(self) -> None:
        if self.frames < 10:
            raise ValidationError(f"phantom needs at least 10 frames, got {self.frames}")
        if self.width < 8 or self.height < 8:
            raise ValidationError(f"phantom must be at least 8x8 pixels, got {self.width}x{self.height}")
        if not self.seed >= 0 or self.seed >= 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.noise_sigma >= 0:
            raise ValidationError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if not self.delta_t > 0:
            raise ValidationError(f"delta_t must be positive, got {self.delta_t}")
        if not self.poisson_rate > 0 or not self.sigmoid_scale > 0:
            raise ValidationError("poisson_rate and sigmoid_scale must be positive")
        if not self.kidney_regions or not self.liver_regions:
            raise ValidationError("phantom needs at least one kidney and one liver region")
        for region in self.kidney_regions + self.liver_regions:
            if not region.inside(self.height, self.width):
                raise ValidationError(f"region {region} lies outside the {self.width}x{self.height} image")
        if np.any(self.kidney_mask() & self.liver_mask()):
            raise ValidationError("kidney and liver regions overlap")

    def kidney_mask(self) -> np.ndarray:
        return _union(self.kidney_regions, self.height, self.width)

    def liver_mask(self) -> np.ndarray:
        return _union(self.liver_regions, self.height, self.width)


def _union(regions, height, width) -> np.ndarray:
    m = np.zeros((height, width), dtype=bool)
    for r in regions:
        m |= r.mask(height, width)
    return m


def _frame_index(t, spec: PhantomSpec) -> np.ndarray:
    t = np.asarray(t)
    if np.any(t < 0) or np.any(t >= spec.frames):
        raise ValidationError(f"frame index must lie in 0..{spec.frames - 1}")
    return t.astype(np.float64)


def _poisson_pmf(t: np.ndarray, rate: float) -> np.ndarray:
    lg = np.array([math.lgamma(v + 1.0) for v in np.ravel(t)]).reshape(np.shape(t))
    return np.exp(t * math.log(rate) - rate - lg)


def poisson_term(t, spec: PhantomSpec):
    """Poisson pmf at frame t, divided by its maximum over the sequence."""
    t = _frame_index(t, spec)
    peak = _poisson_pmf(np.arange(spec.frames, dtype=np.float64), spec.poisson_rate).max()
    return _poisson_pmf(t, spec.poisson_rate) / peak


def kidney_curve(t, spec: PhantomSpec):
    t = _frame_index(t, spec)
    return (spec.poisson_weight * poisson_term(t, spec)
            + spec.log_weight * np.log1p(t) / math.log(spec.frames))


def liver_curve(t, spec: PhantomSpec):
    """Unit sigmoid centred on ``sigmoid_center`` with width ``sigmoid_scale``."""
    t = _frame_index(t, spec)
    z = (t - spec.sigmoid_center) / spec.sigmoid_scale
    e = np.exp(-np.abs(z))  # never overflows
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class PhantomOutput:
    sequence: ImageSequence
    kidney_mask: np.ndarray
    liver_mask: np.ndarray
    kidney_curve: TimeIntensityCurve
    liver_curve: TimeIntensityCurve
    spec: PhantomSpec


def generate(spec: PhantomSpec | None = None) -> PhantomOutput:
    spec = spec or PhantomSpec()
    spec.validate()
    kmask = spec.kidney_mask()
    lmask = spec.liver_mask()
    t = np.arange(spec.frames)
    k = kidney_curve(t, spec)
    l = spec.liver_weight * liver_curve(t, spec)
    frames = k[:, None, None] * kmask + l[:, None, None] * lmask
    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        frames = frames + rng.normal(0.0, spec.noise_sigma, size=frames.shape)
    seq = ImageSequence(frames, spec.delta_t)
    times = seq.times
    return PhantomOutput(
        sequence=seq,
        kidney_mask=kmask,
        liver_mask=lmask,
        kidney_curve=TimeIntensityCurve(k, times, int(kmask.sum())),
        liver_curve=TimeIntensityCurve(l, times, int(lmask.sum())),
        spec=spec,
    )


def spec_metadata(spec: PhantomSpec) -> dict:
    meta = asdict(spec)
    meta["kidney_regions"] = [{"type": type(r).__name__, **asdict(r)} for r in spec.kidney_regions]
    meta["liver_regions"] = [{"type": type(r).__name__, **asdict(r)} for r in spec.liver_regions]
    meta["rng_algorithm"] = RNG_ALGORITHM
    meta["frame_intensity_offset"] = FRAME_INTENSITY_OFFSET
    meta["frame_intensity_scale"] = FRAME_INTENSITY_SCALE
    return meta


def write_phantom(out: PhantomOutput, directory) -> None:
    """Write frames, manifest, ground-truth masks, curves and metadata.

    Layout::

        frames/frame_0000.pgm ... frames/sequence.toml
        kidney_mask.pgm  liver_mask.pgm
        kidney_curve.csv liver_curve.csv
        phantom.json
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_sequence(directory / "frames", out.sequence, FRAME_INTENSITY_OFFSET, FRAME_INTENSITY_SCALE)
    write_mask(directory / "kidney_mask.pgm", out.kidney_mask)
    write_mask(directory / "liver_mask.pgm", out.liver_mask)
    write_curve_csv(out.kidney_curve, directory / "kidney_curve.csv")
    write_curve_csv(out.liver_curve, directory / "liver_curve.csv")
    (directory / "phantom.json").write_text(json.dumps(spec_metadata(out.spec), indent=2, sort_keys=True) + "\n")
