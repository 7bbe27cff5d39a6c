"""Balanced k-d tree over 3D points with exact nearest-neighbor queries.

Results match a brute-force linear scan bit for bit, including the
tie-breaking rule (lowest point id wins). Subtrees are only pruned when the
splitting plane is strictly farther than the current best, so equal-distance
candidates with lower ids are never skipped.
"""
from __future__ import annotations

import numpy as np

from .geometry import GeometryError, PointCloud


class SpatialIndex:
    """Immutable exact nearest-neighbor index; safe for concurrent queries."""

    def __init__(self, points: np.ndarray | PointCloud):
        pts = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise GeometryError("SpatialIndex needs an (N, 3) array with N >= 1")
        self._points = np.ascontiguousarray(pts)
        n = pts.shape[0]
        self._point_id = np.empty(n, dtype=np.int64)
        self._axis = np.empty(n, dtype=np.int64)
        self._left = np.full(n, -1, dtype=np.int64)
        self._right = np.full(n, -1, dtype=np.int64)
        self._n_nodes = 0
        self._root = self._build(np.arange(n, dtype=np.int64), 0)

    def __len__(self) -> int:
        return self._points.shape[0]

    def _build(self, ids: np.ndarray, depth: int) -> int:
        if ids.size == 0:
            return -1
        axis = depth % 3
        # sort by (coordinate, id) for a deterministic balanced median split
        order = np.lexsort((ids, self._points[ids, axis]))
        ids = ids[order]
        mid = ids.size // 2
        node = self._n_nodes
        self._n_nodes += 1
        self._point_id[node] = ids[mid]
        self._axis[node] = axis
        self._left[node] = self._build(ids[:mid], depth + 1)
        self._right[node] = self._build(ids[mid + 1:], depth + 1)
        return node

    def nearest(self, query) -> tuple[int, float]:
        """Return (point id, squared distance) of the exact nearest stored
        point, lowest id on ties."""
        q = np.asarray(query, dtype=np.float64)
        pts = self._points
        axis_arr = self._axis
        left_arr = self._left
        right_arr = self._right
        pid_arr = self._point_id
        best_d = np.inf
        best_id = -1
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node < 0:
                continue
            pid = pid_arr[node]
            p = pts[pid]
            dx = q[0] - p[0]
            dy = q[1] - p[1]
            dz = q[2] - p[2]
            d = dx * dx + dy * dy + dz * dz
            if d < best_d or (d == best_d and pid < best_id):
                best_d = d
                best_id = pid
            axis = axis_arr[node]
            delta = q[axis] - p[axis]
            if delta < 0:
                near, far = left_arr[node], right_arr[node]
            else:
                near, far = right_arr[node], left_arr[node]
            if far >= 0 and delta * delta <= best_d:
                stack.append(far)
            if near >= 0:
                stack.append(near)
        return int(best_id), float(best_d)

    def nearest_batch(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ids = np.empty(queries.shape[0], dtype=np.int64)
        sq = np.empty(queries.shape[0], dtype=np.float64)
        for i, q in enumerate(queries):
            ids[i], sq[i] = self.nearest(q)
        return ids, sq


def nearest_neighbor(index: SpatialIndex, query) -> tuple[int, float]:
    """Exact nearest neighbor of ``query`` among the indexed points."""
    if len(index) == 0:
        raise GeometryError("empty index")
    return index.nearest(query)
