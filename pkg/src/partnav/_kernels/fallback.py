"""Pure-numpy versions of the compiled kernels.

Every function here must produce bit-identical output to ``_native``: the
squared distance is accumulated coordinate by coordinate in the same order,
and ties resolve to the lowest index (``argmin``/``argmax`` first occurrence).
"""
from __future__ import annotations

import numpy as np


def cross_nn(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = a[:, 0, None] - b[None, :, 0]
    dy = a[:, 1, None] - b[None, :, 1]
    dz = a[:, 2, None] - b[None, :, 2]
    d = dx * dx + dy * dy + dz * dz
    idx = np.argmin(d, axis=1)
    sq = d[np.arange(a.shape[0]), idx]
    return idx.astype(np.int64), np.ascontiguousarray(sq)


def farthest_point_indices(pts: np.ndarray, n: int, start: int) -> np.ndarray:
    total = pts.shape[0]
    order = np.empty(n, dtype=np.int64)
    mind = np.full(total, np.inf)
    cur = start
    order[0] = cur
    for k in range(1, n):
        mind[cur] = -1.0
        dx = pts[:, 0] - pts[cur, 0]
        dy = pts[:, 1] - pts[cur, 1]
        dz = pts[:, 2] - pts[cur, 2]
        np.minimum(mind, dx * dx + dy * dy + dz * dz, out=mind)
        cur = int(np.argmax(mind))
        order[k] = cur
    return order
