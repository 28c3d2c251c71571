"""Backend selection for the hot labelling loop.

The compiled ``_ccl`` extension is used when it was built; otherwise the
pure Python twin in ``_ccl_py`` takes over.  Setting the environment
variable ``DMDSEG_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _ccl_py

if os.environ.get("DMDSEG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _ccl_py
    BACKEND = "python"
else:
    try:
        from . import _ccl as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _ccl_py
        BACKEND = "python"


def label(mask, connectivity: int = 8):
    """Connected-component labels of a 2-D boolean mask: (int32 array, count)."""
    mask = np.ascontiguousarray(np.asarray(mask, dtype=bool).view(np.uint8))
    if mask.ndim != 2:
        raise ValueError(f"mask must be two dimensional, got shape {mask.shape}")
    return _impl.label(mask, connectivity)
