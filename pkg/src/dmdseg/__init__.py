"""Functional segmentation of dynamic grayscale image sequences with dynamic mode decomposition."""

__version__ = "0.1.0"

from .dmd import DmdResult, fit
from .errors import DmdsegError, EmptySegmentationError, FormatError, NumericalError, ValidationError
from .imaging import ImageSequence, flatten, load_sequence, unflatten
from .kernels import BACKEND
from .ordering import order_modes, select_mode
from .pipeline import run

__all__ = [
    "BACKEND",
    "DmdResult",
    "DmdsegError",
    "EmptySegmentationError",
    "FormatError",
    "ImageSequence",
    "NumericalError",
    "ValidationError",
    "fit",
    "flatten",
    "load_sequence",
    "order_modes",
    "run",
    "select_mode",
    "unflatten",
]
