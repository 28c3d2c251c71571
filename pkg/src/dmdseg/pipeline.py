"""End-to-end functional segmentation of an image sequence."""
from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

from . import dmd
from .errors import DmdsegError
from .imaging import ImageSequence, flatten
from .ordering import OrderedModes, mode_to_image, order_modes, select_mode
from .quantification import TimeIntensityCurve, apply_template
from .segmentation import Segmentation, segment_steps


@contextlib.contextmanager
def stage(name: str):
    """Tag library errors raised inside the block with the pipeline stage name."""
    try:
        yield
    except DmdsegError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


@dataclass(frozen=True)
class PipelineResult:
    decomposition: dmd.DmdResult
    ordered: OrderedModes
    mode_index: int
    mode_image: np.ndarray
    segmentation: Segmentation
    curve: TimeIntensityCurve

    @property
    def template(self) -> np.ndarray:
        return self.segmentation.template


def run(seq: ImageSequence, mode: int = 2, rel_cutoff: float = dmd.DEFAULT_REL_CUTOFF,
        rank: int | str | None = None, connectivity: int = 8, top_k: int = 1,
        threshold="otsu") -> PipelineResult:
    """DMD -> phase ordering -> mode image -> template -> time-intensity curve."""
    with stage("dmd"):
        result = dmd.fit(flatten(seq), seq.delta_t, rel_cutoff, rank)
    with stage("mode ordering"):
        ordered = order_modes(result)
        image = mode_to_image(select_mode(ordered, mode), seq.width, seq.height)
    with stage("segmentation"):
        seg = segment_steps(image, connectivity, top_k, threshold)
    with stage("quantification"):
        curve = apply_template(seq, seg.template)
    return PipelineResult(result, ordered, mode, image, seg, curve)
