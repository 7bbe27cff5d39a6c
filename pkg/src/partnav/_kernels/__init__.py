"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is bit-identical but
slower on large clouds. Set ``PARTNAV_PURE_PYTHON=1`` to force the fallback
(used by the benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os

from . import fallback

if os.environ.get("PARTNAV_PURE_PYTHON", "") == "1":
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

cross_nn = _impl.cross_nn
farthest_point_indices = _impl.farthest_point_indices

__all__ = ["BACKEND", "cross_nn", "farthest_point_indices", "fallback"]
