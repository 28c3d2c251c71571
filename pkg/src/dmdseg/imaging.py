"""Grayscale image sequences, binary masks and their on-disk formats.

Pixel ordering is row-major everywhere in the package: a frame of
``height`` rows and ``width`` columns flattens to a vector whose element
``r * width + c`` is the pixel in row ``r``, column ``c``.  Segmentation
labels, mode images and data-matrix rows all rely on this.

Supported files
---------------
* binary PGM (``P5``), 8 bit or big-endian 16 bit (``maxval <= 65535``)
* ASCII PGM (``P2``)
* ``sequence.toml`` manifests (see :func:`read_manifest`)

Integer samples are promoted to float64 without rescaling, unless a manifest
declares an ``intensity_offset``/``intensity_scale`` calibration.
"""
from __future__ import annotations

import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

MANIFEST_NAME = "sequence.toml"
DEFAULT_DELTA_T = 1.0

_WHITESPACE = b" \t\r\n\v\f"


@dataclass(frozen=True)
class ImageSequence:
    """Equally spaced grayscale frames, stored as a read-only (N, height, width) array."""

    frames: np.ndarray
    delta_t: float = DEFAULT_DELTA_T

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim == 2:
            frames = frames[np.newaxis]
        if frames.ndim != 3:
            raise ValidationError(f"frames must be a (N, height, width) stack, got shape {frames.shape}")
        if frames.shape[0] == 0 or frames.shape[1] == 0 or frames.shape[2] == 0:
            raise ValidationError("image sequence is empty")
        if not np.all(np.isfinite(frames)):
            raise ValidationError("image sequence contains non-finite intensities")
        if not (self.delta_t > 0 and np.isfinite(self.delta_t)):
            raise ValidationError(f"delta_t must be a positive number, got {self.delta_t!r}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "delta_t", float(self.delta_t))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width) of every frame."""
        return self.frames.shape[1], self.frames.shape[2]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.delta_t


def flatten(seq: ImageSequence) -> np.ndarray:
    """Data matrix with one row-major flattened frame per column, shape (mn, N)."""
    n = len(seq)
    return np.ascontiguousarray(seq.frames.reshape(n, -1).T)


def unflatten(col, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`flatten` for a single column."""
    col = np.asarray(col)
    if col.ndim != 1 or col.shape[0] != width * height:
        raise ValidationError(
            f"cannot reshape vector of length {col.size} into a {width}x{height} frame"
        )
    return col.reshape(height, width).copy()


def sequence_from_matrix(x: np.ndarray, width: int, height: int, delta_t: float = DEFAULT_DELTA_T) -> ImageSequence:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != width * height:
        raise ValidationError(f"data matrix of shape {x.shape} does not hold {width}x{height} frames")
    return ImageSequence(x.T.reshape(x.shape[1], height, width), delta_t)


# ---------------------------------------------------------------- PGM files

def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping comments.

    Returns the tokens and the offset of the single whitespace byte that
    terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise FormatError("truncated PGM header")
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode PGM bytes into a (height, width) integer array."""
    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"unsupported image magic {magic!r}; expected P5 or P2")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"malformed PGM header: {b' '.join(tokens)!r}") from None
    if width <= 0 or height <= 0:
        raise FormatError(f"invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise FormatError(f"PGM maxval {maxval} outside 1..65535")

    count = width * height
    if magic == b"P5":
        body = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        needed = count * dtype.itemsize
        if len(body) < needed:
            raise FormatError(f"PGM raster too short: {len(body)} bytes, expected {needed}")
        pixels = np.frombuffer(body, dtype=dtype, count=count).astype(np.uint16)
    else:
        # comments are not allowed in the raster of a plain PGM
        try:
            values = [int(v) for v in data[pos:].split()]
        except ValueError:
            raise FormatError("non-integer sample in ASCII PGM raster") from None
        if len(values) < count:
            raise FormatError(f"ASCII PGM has {len(values)} samples, expected {count}")
        pixels = np.array(values[:count], dtype=np.int64)
        if pixels.min() < 0:
            raise FormatError("negative sample in ASCII PGM")
    if pixels.max() > maxval:
        raise FormatError(f"sample value {int(pixels.max())} exceeds maxval {maxval}")
    return pixels.reshape(height, width)


def read_pgm(path) -> np.ndarray:
    """Read a P5 or P2 graymap as a float64 (height, width) array."""
    path = Path(path)
    data = path.read_bytes()
    try:
        return parse_pgm(data).astype(np.float64)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def encode_pgm(pixels, maxval: int | None = None) -> bytes:
    """Encode a nonnegative integer array as binary PGM (P5)."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValidationError("PGM images are two dimensional")
    if pixels.size and (pixels.min() < 0 or not np.all(pixels == np.rint(pixels))):
        raise ValidationError("PGM samples must be nonnegative integers")
    top = int(pixels.max()) if pixels.size else 0
    if maxval is None:
        maxval = 255 if top <= 255 else 65535
    if top > maxval or maxval > 65535:
        raise ValidationError(f"sample value {top} does not fit maxval {maxval}")
    height, width = pixels.shape
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + pixels.astype(dtype).tobytes()


def write_pgm(path, pixels, maxval: int | None = None) -> None:
    Path(path).write_bytes(encode_pgm(pixels, maxval))


def read_mask(path) -> np.ndarray:
    """Read a PGM mask; any nonzero sample is foreground."""
    return read_pgm(path) != 0


def write_mask(path, mask) -> None:
    """Write a boolean mask as an 8-bit P5 image with values {0, 255}."""
    mask = np.asarray(mask, dtype=bool)
    write_pgm(path, mask.astype(np.uint8) * 255, maxval=255)


def to_uint8(img) -> np.ndarray:
    """Min-max scale a real image to 0..255 for inspection output."""
    img = np.asarray(img, dtype=np.float64)
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.rint((img - lo) / (hi - lo) * 255).astype(np.uint8)


# ----------------------------------------------------------------- manifests

@dataclass(frozen=True)
class Manifest:
    frames: tuple[Path, ...]
    delta_t: float | None = None
    intensity_offset: float = 0.0
    intensity_scale: float = 1.0


def read_manifest(path) -> Manifest:
    """Parse a ``sequence.toml`` manifest.

    The manifest is a TOML document with these keys::

        delta_t_seconds = 2.875          # optional, seconds between frames
        intensity_offset = 10000.0       # optional, default 0
        intensity_scale = 20000.0        # optional, default 1
        frames = ["f_000.pgm", "f_001.pgm"]

    Frame paths are resolved relative to the manifest.  When a calibration is
    given, loaded samples become ``(raw - intensity_offset) / intensity_scale``.
    """
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    frames = doc.get("frames")
    if not isinstance(frames, list) or not all(isinstance(f, str) for f in frames):
        raise FormatError(f"{path}: 'frames' must be a list of file names")
    delta_t = doc.get("delta_t_seconds")
    try:
        offset = float(doc.get("intensity_offset", 0.0))
        scale = float(doc.get("intensity_scale", 1.0))
        delta_t = None if delta_t is None else float(delta_t)
    except (TypeError, ValueError):
        raise FormatError(f"{path}: numeric manifest field has a non-numeric value") from None
    if scale == 0:
        raise FormatError(f"{path}: intensity_scale must be nonzero")
    base = path.parent
    return Manifest(tuple(base / f for f in frames), delta_t, offset, scale)


def write_manifest(path, frame_names: Iterable[str], delta_t: float | None = None,
                   intensity_offset: float | None = None, intensity_scale: float | None = None) -> None:
    lines = ["# dmdseg image sequence manifest"]
    if delta_t is not None:
        lines.append(f"delta_t_seconds = {float(delta_t)!r}")
    if intensity_offset is not None:
        lines.append(f"intensity_offset = {float(intensity_offset)!r}")
    if intensity_scale is not None:
        lines.append(f"intensity_scale = {float(intensity_scale)!r}")
    lines.append("frames = [")
    lines.extend(f'  "{name}",' for name in frame_names)
    lines.append("]")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _natural_check(names: Sequence[str]) -> None:
    # lexicographic order only matches temporal order with zero padded indices
    digits = {len(m.group()) for n in names for m in [re.search(r"\d+(?=\.[^.]*$)", n)] if m}
    if len(digits) > 1:
        logger.warning("frame indices have mixed widths %s; temporal order is lexicographic", sorted(digits))


def load_sequence(path, delta_t: float | None = None) -> ImageSequence:
    """Load an image sequence from a directory of PGM frames or a manifest.

    A directory containing ``sequence.toml`` is loaded through its manifest;
    otherwise every ``*.pgm`` file in it is a frame, in lexicographic order.
    An explicit ``delta_t`` overrides the manifest value; if neither is
    given the lag defaults to 1 second.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    manifest = None
    if path.is_dir():
        if (path / MANIFEST_NAME).is_file():
            manifest = read_manifest(path / MANIFEST_NAME)
            files = list(manifest.frames)
        else:
            files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm" and p.is_file())
            _natural_check([p.name for p in files])
    else:
        manifest = read_manifest(path)
        files = list(manifest.frames)
    if not files:
        raise ValidationError(f"no frames found in {path}")

    frames = []
    for i, f in enumerate(files, start=1):
        img = read_pgm(f)
        if frames and img.shape != frames[0].shape:
            h0, w0 = frames[0].shape
            raise ValidationError(
                f"dimension mismatch at frame {i}: {img.shape[1]}x{img.shape[0]} vs {w0}x{h0}"
            )
        frames.append(img)
    stack = np.stack(frames)

    if manifest is not None:
        if manifest.intensity_offset != 0.0 or manifest.intensity_scale != 1.0:
            stack = (stack - manifest.intensity_offset) / manifest.intensity_scale
        if delta_t is None:
            delta_t = manifest.delta_t
    if delta_t is None:
        logger.info("no frame lag given; assuming delta_t = %g s", DEFAULT_DELTA_T)
        delta_t = DEFAULT_DELTA_T
    return ImageSequence(stack, delta_t)


def save_sequence(directory, seq: ImageSequence, intensity_offset: float = 0.0,
                  intensity_scale: float = 1.0, prefix: str = "frame_") -> list[str]:
    """Write frames as 16-bit P5 files plus a manifest.

    Samples are stored as ``round(x * intensity_scale + intensity_offset)``
    clipped to 0..65535; the manifest records the calibration so that
    :func:`load_sequence` restores physical units.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(seq) - 1)))
    names = []
    for i, frame in enumerate(seq.frames):
        raw = np.rint(frame * intensity_scale + intensity_offset)
        clipped = np.clip(raw, 0, 65535)
        if np.any(clipped != raw):
            logger.warning("frame %d: %d samples clipped to the 16-bit range", i, int(np.sum(clipped != raw)))
        name = f"{prefix}{i:0{width}d}.pgm"
        write_pgm(directory / name, clipped.astype(np.uint16), maxval=65535)
        names.append(name)
    write_manifest(directory / MANIFEST_NAME, names, seq.delta_t, intensity_offset, intensity_scale)
    return names
