"""Core point-set math: clouds, Chamfer distance, sampling, normalization.

All distances are squared-euclidean and all aggregates use compensated
summation so results are reproducible across platforms and independent of
argument order where symmetry is promised.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .rng import make_rng

UPSAMPLE_JITTER_SIGMA = 0.005


class GeometryError(ValueError):
    """Precondition violation in a geometry operation."""


def kahan_sum(values: np.ndarray) -> float:
    """Compensated sum, fixed left-to-right order."""
    total = 0.0
    comp = 0.0
    for v in values:
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def kahan_mean(values: np.ndarray) -> float:
    return kahan_sum(values) / len(values)


@dataclass(frozen=True)
class PointCloud:
    """N x 3 coordinate matrix with optional per-point part labels."""

    points: np.ndarray
    labels: np.ndarray | None = None
    normalized: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise GeometryError(f"points must be (N, 3) with N >= 1, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise GeometryError("points contain non-finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise GeometryError(
                    f"labels must be length {pts.shape[0]}, got {lab.shape}"
                )
            if lab.min() < 0:
                raise GeometryError("labels must be nonnegative part ids")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)
        if self.normalized:
            c = pts.mean(axis=0)
            if np.linalg.norm(c) > 1e-9:
                raise GeometryError("normalized cloud has off-origin centroid")
            r = np.sqrt((pts * pts).sum(axis=1).max())
            if not (0.0 < r <= 1.0 + 1e-9):
                raise GeometryError("normalized cloud has max radius outside (0, 1]")

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, mask: np.ndarray) -> "PointCloud":
        if mask.sum() == 0:
            raise GeometryError("subset would be empty")
        return PointCloud(
            self.points[mask],
            None if self.labels is None else self.labels[mask],
        )

    def part(self, part_id: int) -> "PointCloud":
        if self.labels is None:
            raise GeometryError("cloud has no labels")
        return self.subset(self.labels == part_id)

    def part_size(self, part_id: int) -> int:
        if self.labels is None:
            return 0
        return int((self.labels == part_id).sum())


def _directed_mean_sq(a: np.ndarray, b: np.ndarray) -> float:
    _, sq = _kernels.cross_nn(a, b)
    return kahan_mean(sq)


def chamfer_distance(a: PointCloud | np.ndarray, b: PointCloud | np.ndarray,
                     method: str = "auto") -> float:
    """Symmetric Chamfer distance: mean squared nearest-neighbor distance in
    both directions, summed.

    ``method`` selects the nearest-neighbor path: "brute" uses the kernel
    backend, "index" goes through :class:`partnav.kdtree.SpatialIndex`. Both
    are exact with identical tie handling, so they return the same value;
    "auto" picks "brute".
    """
    pa = a.points if isinstance(a, PointCloud) else np.asarray(a, dtype=np.float64)
    pb = b.points if isinstance(b, PointCloud) else np.asarray(b, dtype=np.float64)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise GeometryError("chamfer_distance requires non-empty clouds")
    pa = np.ascontiguousarray(pa)
    pb = np.ascontiguousarray(pb)
    if method in ("auto", "brute"):
        return _directed_mean_sq(pa, pb) + _directed_mean_sq(pb, pa)
    if method == "index":
        from .kdtree import SpatialIndex

        ia, ib = SpatialIndex(pa), SpatialIndex(pb)
        ab = np.array([ib.nearest(p)[1] for p in pa])
        ba = np.array([ia.nearest(p)[1] for p in pb])
        return kahan_mean(ab) + kahan_mean(ba)
    raise GeometryError(f"unknown chamfer method {method!r}")


def normalize_unit_sphere(cloud: PointCloud) -> tuple[PointCloud, np.ndarray, float]:
    """Center on the centroid and scale so the farthest point sits on the unit
    sphere. Returns (normalized cloud, centroid, scale) so edits can be mapped
    back to the source frame.
    """
    pts = cloud.points
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    scale = float(np.sqrt((shifted * shifted).sum(axis=1).max()))
    if scale < 1e-12:
        raise GeometryError("degenerate cloud: all points identical")
    out = PointCloud(shifted / scale, cloud.labels, normalized=True)
    return out, centroid, scale


def farthest_point_sample(cloud: PointCloud, n: int) -> PointCloud:
    """Deterministic FPS starting from the lowest point id; ties pick the
    lowest unselected id. Output order is selection order."""
    if n < 1 or n > len(cloud):
        raise GeometryError(f"fps size {n} out of range for cloud of {len(cloud)}")
    order = _kernels.farthest_point_indices(cloud.points, n, 0)
    return PointCloud(
        cloud.points[order],
        None if cloud.labels is None else cloud.labels[order],
    )


def resample(cloud: PointCloud, n: int, seed: int) -> PointCloud:
    """Return exactly ``n`` points: FPS when down-sampling, jittered
    duplicates (sigma 0.005, seeded) when up-sampling. Labels are carried
    along; duplicates inherit the source label.
    """
    if n < 1:
        raise GeometryError("resample target must be positive")
    size = len(cloud)
    if n <= size:
        return farthest_point_sample(cloud, n)
    rng = make_rng(seed, "resample", size, n)
    extra = n - size
    src = np.arange(extra, dtype=np.int64) % size
    jitter = rng.normal(0.0, UPSAMPLE_JITTER_SIGMA, size=(extra, 3))
    pts = np.concatenate([cloud.points, cloud.points[src] + jitter])
    labels = None
    if cloud.labels is not None:
        labels = np.concatenate([cloud.labels, cloud.labels[src]])
    return PointCloud(pts, labels)
