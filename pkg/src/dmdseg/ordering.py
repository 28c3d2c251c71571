"""Canonical ordering of dynamic modes by eigenvalue phase angle.

Conjugate pairs carry the same spatial information, so only the member
with nonnegative imaginary part is kept.  The survivors are sorted by
``|arg(sigma)|`` ascending; equal angles fall back to larger ``|sigma|``
first, then to the original index.  Mode 1 of the result is therefore the
slowest, most persistent mode (the stationary background when present).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmd import DmdResult
from .errors import ValidationError
from .imaging import unflatten

PAIR_TOL = 1e-8


@dataclass(frozen=True)
class ModeEntry:
    index: int
    eigenvalue: complex
    phase: float
    mode: np.ndarray


@dataclass(frozen=True)
class OrderedModes:
    entries: tuple[ModeEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.eigenvalue for e in self.entries], dtype=np.complex128)

    @property
    def indices(self) -> list[int]:
        return [e.index for e in self.entries]


def _tol(z: complex) -> float:
    return PAIR_TOL * max(1.0, abs(z))


def dedup_conjugates(eigenvalues) -> list[int]:
    """Indices that survive conjugate-pair removal.

    Real eigenvalues (``|Im| <= tol``) and those with positive imaginary
    part are kept.  An eigenvalue with negative imaginary part is dropped
    when an unclaimed partner with ``|s - conj(partner)| <= tol`` exists.
    """
    eig = np.asarray(eigenvalues, dtype=np.complex128)
    upper = [i for i, z in enumerate(eig) if z.imag > _tol(z)]
    lower = [i for i, z in enumerate(eig) if z.imag < -_tol(z)]
    claimed = set()
    keep = [i for i, z in enumerate(eig) if abs(z.imag) <= _tol(z)] + upper
    for i in lower:
        target = np.conj(eig[i])
        best, best_d = None, None
        for j in upper:
            if j in claimed:
                continue
            d = abs(eig[j] - target)
            if d <= _tol(target) and (best_d is None or d < best_d):
                best, best_d = j, d
        if best is None:
            keep.append(i)
        else:
            claimed.add(best)
    return sorted(keep)


def order_modes(result: DmdResult) -> OrderedModes:
    if result.rank < 1:
        raise ValidationError("no modes to order")
    eig = result.eigenvalues
    keep = dedup_conjugates(eig)
    phase = {i: abs(float(np.arctan2(eig[i].imag, eig[i].real))) for i in keep}
    keep.sort(key=lambda i: (phase[i], -abs(eig[i]), i))
    return OrderedModes(tuple(
        ModeEntry(i, complex(eig[i]), phase[i], result.modes[:, i]) for i in keep
    ))


def select_mode(ordered: OrderedModes, k: int) -> np.ndarray:
    """Mode column of the k-th ordered entry (1-based)."""
    n = len(ordered)
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ValidationError(f"mode index {k} out of range: {n} ordered modes available (1..{n})")
    return ordered.entries[k - 1].mode


def mode_to_image(mode_column, width: int, height: int) -> np.ndarray:
    """Element-wise modulus of a mode, reshaped to a (height, width) frame."""
    return unflatten(np.abs(np.asarray(mode_column)), width, height)
