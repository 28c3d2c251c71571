"""Lag-one snapshot pairs built from a data matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SnapshotPair:
    """``p1`` holds columns 0..N-2 of the data matrix, ``p2`` columns 1..N-1."""

    p1: np.ndarray
    p2: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.p1.shape


def split_snapshots(x) -> SnapshotPair:
    """Split a (mn, N) data matrix into the shifted pair (P1, P2).

    Both halves are copies, so later changes to ``x`` do not leak into
    downstream results.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"data matrix must be two dimensional, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValidationError(f"need at least 2 snapshots to form a pair, got {x.shape[1]}")
    p1 = x[:, :-1].copy()
    p2 = x[:, 1:].copy()
    p1.setflags(write=False)
    p2.setflags(write=False)
    return SnapshotPair(p1, p2)
