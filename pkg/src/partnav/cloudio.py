"""Point-cloud file I/O: ASCII PLY and plain-text XYZ.

Both formats carry x y z coordinates and an optional per-point part id.
Values are written with 9 significant digits so a write/read round trip
preserves coordinates to that precision.
"""
from __future__ import annotations

import os

import numpy as np

from .geometry import PointCloud


class CloudFormatError(ValueError):
    """Malformed point-cloud file."""


def _fmt(v: float) -> str:
    return format(v, ".9g")


def write_xyz(path: str | os.PathLike, cloud: PointCloud) -> None:
    lines = ["# x y z" + (" part" if cloud.labels is not None else "")]
    for i, p in enumerate(cloud.points):
        row = f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}"
        if cloud.labels is not None:
            row += f" {int(cloud.labels[i])}"
        lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_xyz(path: str | os.PathLike) -> PointCloud:
    pts: list[list[float]] = []
    labels: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) not in (3, 4):
                raise CloudFormatError(f"{path}:{lineno}: expected 3 or 4 columns")
            try:
                pts.append([float(t) for t in tokens[:3]])
            except ValueError as exc:
                raise CloudFormatError(f"{path}:{lineno}: bad float") from exc
            if len(tokens) == 4:
                labels.append(int(tokens[3]))
    if not pts:
        raise CloudFormatError(f"{path}: no points")
    if labels and len(labels) != len(pts):
        raise CloudFormatError(f"{path}: mixed labeled/unlabeled rows")
    return PointCloud(np.array(pts), np.array(labels) if labels else None)


def write_ply(path: str | os.PathLike, cloud: PointCloud) -> None:
    has_labels = cloud.labels is not None
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if has_labels:
        header.append("property uchar part")
    header.append("end_header")
    lines = header
    for i, p in enumerate(cloud.points):
        row = f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}"
        if has_labels:
            row += f" {int(cloud.labels[i])}"
        lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ply(path: str | os.PathLike) -> PointCloud:
    with open(path) as fh:
        first = fh.readline().strip()
        if first != "ply":
            raise CloudFormatError(f"{path}: missing ply magic")
        n_vertex = None
        props: list[str] = []
        while True:
            line = fh.readline()
            if not line:
                raise CloudFormatError(f"{path}: truncated header")
            line = line.strip()
            if line == "end_header":
                break
            tokens = line.split()
            if tokens[:2] == ["element", "vertex"]:
                n_vertex = int(tokens[2])
            elif tokens and tokens[0] == "property":
                props.append(tokens[-1])
        if n_vertex is None:
            raise CloudFormatError(f"{path}: no vertex element")
        if props[:3] != ["x", "y", "z"]:
            raise CloudFormatError(f"{path}: expected x y z properties, got {props}")
        has_labels = "part" in props
        part_col = props.index("part") if has_labels else -1
        pts = np.empty((n_vertex, 3))
        labels = np.empty(n_vertex, dtype=np.int64) if has_labels else None
        for i in range(n_vertex):
            tokens = fh.readline().split()
            if len(tokens) != len(props):
                raise CloudFormatError(f"{path}: vertex row {i} has {len(tokens)} columns")
            pts[i] = [float(tokens[0]), float(tokens[1]), float(tokens[2])]
            if labels is not None:
                labels[i] = int(tokens[part_col])
    return PointCloud(pts, labels)


def write_cloud(path: str | os.PathLike, cloud: PointCloud) -> None:
    path = os.fspath(path)
    if path.endswith(".ply"):
        write_ply(path, cloud)
    elif path.endswith(".xyz"):
        write_xyz(path, cloud)
    else:
        raise CloudFormatError(f"unknown cloud extension: {path}")


def read_cloud(path: str | os.PathLike) -> PointCloud:
    path = os.fspath(path)
    if path.endswith(".ply"):
        return read_ply(path)
    if path.endswith(".xyz"):
        return read_xyz(path)
    raise CloudFormatError(f"unknown cloud extension: {path}")


__all__ = [
    "CloudFormatError",
    "read_cloud",
    "read_ply",
    "read_xyz",
    "write_cloud",
    "write_ply",
    "write_xyz",
]
