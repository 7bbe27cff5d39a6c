"""Procedural generator of part-labeled chair point clouds.

Chairs are assembled from box/cylinder/sheet surface primitives in a
canonical frame (x = width, y = depth with the backrest at +y, z = up,
ground at z = 0), sampled area-proportionally, labeled per part, and
normalized to the unit sphere. Every semantic attribute is a total rule
over the generating parameters, so the ground truth for discovery and
evaluation is known by construction.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from enum import IntEnum

import numpy as np

from .geometry import GeometryError, PointCloud, normalize_unit_sphere, resample
from .cloudio import write_cloud, read_cloud
from .rng import derive_seed, make_rng


class PartId(IntEnum):
    BACKREST = 0
    SEAT = 1
    LEGS = 2
    ARMREST = 3


LEG_STYLES = ("straight4", "swivel5", "cantilever")
ARMREST_STYLES = ("none", "connected", "disconnected")
BACK_MODES = ("upright", "reclined", "curved")
SEAT_MODES = ("narrow", "stuffed", "wide")

# attribute rule thresholds (raw units, pre-normalization); recorded in the
# manifest so the oracle is reproducible from the manifest alone
RECLINE_DEG_THRESHOLD = 20.0
CURVATURE_THRESHOLD = 0.5
SEAT_STUFFED_RATIO_MIN = 0.125  # thickness / width
SEAT_NARROW_MAX_WIDTH = 0.50

# stuffed seats sit in the middle of the width range with a much thicker
# slab, so seat semantics are not a single monotone width axis
SEAT_WIDTH_BANDS = {
    "narrow": (0.34, 0.42),
    "stuffed": (0.44, 0.56),
    "wide": (0.58, 0.66),
}
# thickness is sampled as a ratio of the width; a ratio survives the
# per-part re-normalization, so the mode stays a clean shape signal in the
# part latent space
SEAT_THICKNESS_RATIO_BANDS = {
    "narrow": (0.055, 0.09),
    "stuffed": (0.16, 0.2),
    "wide": (0.055, 0.09),
}
RECLINE_BANDS = {"upright": (0.0, 6.0), "reclined": (24.0, 38.0), "curved": (0.0, 6.0)}
CURVATURE_BANDS = {"upright": (0.0, 0.15), "reclined": (0.0, 0.15), "curved": (0.65, 0.95)}
SEAT_DEPTH_RANGE = (0.42, 0.52)
BACK_HEIGHT_RANGE = (0.42, 0.56)
LEG_HEIGHT_RANGE = (0.32, 0.44)


class SpecError(ValueError):
    """Invalid chair specification or sampling configuration."""


@dataclass(frozen=True)
class ChairSpec:
    seat_width: float
    seat_depth: float
    seat_thickness: float
    back_height: float
    back_recline_deg: float
    back_curvature: float
    leg_style: str
    leg_height: float
    armrest_style: str
    seed: int

    def __post_init__(self):
        if self.leg_style not in LEG_STYLES:
            raise SpecError(f"unknown leg style {self.leg_style!r}")
        if self.armrest_style not in ARMREST_STYLES:
            raise SpecError(f"unknown armrest style {self.armrest_style!r}")
        if not (0.0 <= self.back_recline_deg <= 40.0):
            raise SpecError("back_recline_deg outside [0, 40]")
        if not (0.0 <= self.back_curvature <= 1.0):
            raise SpecError("back_curvature outside [0, 1]")
        for name in ("seat_width", "seat_depth", "seat_thickness", "back_height",
                     "leg_height"):
            if getattr(self, name) <= 0:
                raise SpecError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChairSpec":
        return cls(**d)


def default_style_weights() -> dict[str, dict[str, float]]:
    third = 1.0 / 3.0
    return {
        "legs": {s: third for s in LEG_STYLES},
        "armrest": {s: third for s in ARMREST_STYLES},
        "back": {s: third for s in BACK_MODES},
        "seat": {s: third for s in SEAT_MODES},
    }


def _validate_weights(weights: dict[str, dict[str, float]]) -> None:
    expected = {"legs": LEG_STYLES, "armrest": ARMREST_STYLES,
                "back": BACK_MODES, "seat": SEAT_MODES}
    for group, options in expected.items():
        if group not in weights:
            raise SpecError(f"style weights missing group {group!r}")
        w = weights[group]
        if set(w) != set(options):
            raise SpecError(f"style weights for {group!r} must cover {options}")
        vals = [w[o] for o in options]
        if any(v < 0 for v in vals):
            raise SpecError(f"negative weight in group {group!r}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise SpecError(f"weights for {group!r} must sum to 1")


def _pick(rng: np.random.Generator, options: tuple[str, ...], weights: dict[str, float]) -> str:
    u = rng.random()
    acc = 0.0
    for opt in options:
        acc += weights[opt]
        if u < acc:
            return opt
    return options[-1]


def sample_spec(seed: int, style_weights: dict[str, dict[str, float]] | None = None) -> ChairSpec:
    """Draw a valid ChairSpec: styles from the weight table, continuous
    parameters uniform inside the style's band. Deterministic given seed."""
    weights = style_weights if style_weights is not None else default_style_weights()
    _validate_weights(weights)
    rng = make_rng(seed, "chair-spec")
    leg_style = _pick(rng, LEG_STYLES, weights["legs"])
    armrest_style = _pick(rng, ARMREST_STYLES, weights["armrest"])
    back_mode = _pick(rng, BACK_MODES, weights["back"])
    seat_mode = _pick(rng, SEAT_MODES, weights["seat"])

    def uni(lo: float, hi: float) -> float:
        return float(rng.uniform(lo, hi))

    width = uni(*SEAT_WIDTH_BANDS[seat_mode])
    return ChairSpec(
        seat_width=width,
        seat_depth=uni(*SEAT_DEPTH_RANGE),
        seat_thickness=width * uni(*SEAT_THICKNESS_RATIO_BANDS[seat_mode]),
        back_height=uni(*BACK_HEIGHT_RANGE),
        back_recline_deg=uni(*RECLINE_BANDS[back_mode]),
        back_curvature=uni(*CURVATURE_BANDS[back_mode]),
        leg_style=leg_style,
        leg_height=uni(*LEG_HEIGHT_RANGE),
        armrest_style=armrest_style,
        seed=int(seed),
    )


def true_attributes(spec: ChairSpec) -> list[str]:
    """Ground-truth semantic attribute names, one per part, from the rule
    table. Sorted for stable serialization."""
    legs = {"straight4": "legs/straight", "swivel5": "legs/swivel",
            "cantilever": "legs/cantilever"}[spec.leg_style]
    armrest = f"armrest/{spec.armrest_style}"
    if spec.back_recline_deg > RECLINE_DEG_THRESHOLD:
        back = "backrest/reclined"
    elif spec.back_curvature > CURVATURE_THRESHOLD:
        back = "backrest/curved"
    else:
        back = "backrest/upright"
    if spec.seat_thickness / spec.seat_width > SEAT_STUFFED_RATIO_MIN:
        seat = "seat/stuffed"
    elif spec.seat_width <= SEAT_NARROW_MAX_WIDTH:
        seat = "seat/narrow"
    else:
        seat = "seat/wide"
    return sorted([legs, armrest, back, seat])


def subclass_label(spec: ChairSpec) -> str:
    """Object-level style tuple used by the subclass-proxy ablation:
    (leg style, armrest style, recline bucket) as one label."""
    bucket = "reclined" if spec.back_recline_deg > RECLINE_DEG_THRESHOLD else "notreclined"
    return f"{spec.leg_style}+{spec.armrest_style}+{bucket}"


# ---------------------------------------------------------------------------
# surface primitives


class _Box:
    def __init__(self, center, size):
        self.center = np.asarray(center, dtype=float)
        self.size = np.asarray(size, dtype=float)
        sx, sy, sz = self.size
        self.face_areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
        self.area = float(self.face_areas.sum())

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        faces = rng.choice(6, size=n, p=self.face_areas / self.area)
        u = rng.uniform(-0.5, 0.5, size=(n, 2))
        pts = np.empty((n, 3))
        half = self.size / 2.0
        for i in range(n):
            f = faces[i]
            axis = f // 2
            sign = 1.0 if f % 2 == 0 else -1.0
            other = [a for a in range(3) if a != axis]
            p = np.empty(3)
            p[axis] = sign * half[axis]
            p[other[0]] = u[i, 0] * self.size[other[0]]
            p[other[1]] = u[i, 1] * self.size[other[1]]
            pts[i] = p
        return pts + self.center


class _Cylinder:
    def __init__(self, p0, p1, radius):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.radius = float(radius)
        d = self.p1 - self.p0
        self.length = float(np.linalg.norm(d))
        self.axis = d / self.length
        # orthonormal frame around the axis
        ref = np.array([0.0, 0.0, 1.0]) if abs(self.axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        self.u = np.cross(self.axis, ref)
        self.u /= np.linalg.norm(self.u)
        self.v = np.cross(self.axis, self.u)
        self.area = 2.0 * math.pi * self.radius * self.length

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        t = rng.uniform(0.0, 1.0, size=n)
        phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
        ring = (np.cos(phi)[:, None] * self.u + np.sin(phi)[:, None] * self.v) * self.radius
        return self.p0 + t[:, None] * (self.p1 - self.p0) + ring


class _BackSheet:
    """Backrest: a width x height sheet with forward bow (curvature) and a
    backward tilt (recline) about its bottom hinge; thickness is modeled by
    offsetting samples along the local normal to either face."""

    def __init__(self, width, height, hinge_y, hinge_z, recline_deg, curvature,
                 bow_max, thickness, overlap):
        self.w = width
        self.h = height
        self.hy = hinge_y
        self.hz = hinge_z
        self.theta = math.radians(recline_deg)
        self.bow = curvature * bow_max
        self.t = thickness
        self.overlap = overlap
        self.area = 2.0 * width * (height + overlap)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.uniform(-0.5 * self.w, 0.5 * self.w, size=n)
        v = rng.uniform(-self.overlap, self.h, size=n)
        face = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        rel = 2.0 * u / self.w
        bow_y = -self.bow * (1.0 - rel * rel)
        dbow = -self.bow * (-2.0 * rel) * (2.0 / self.w)
        # unit normal of the sheet at u (pre-tilt): cross((1, bow', 0), (0, 0, 1))
        norm = np.stack([dbow, -np.ones_like(dbow), np.zeros_like(dbow)], axis=1)
        norm /= np.linalg.norm(norm, axis=1, keepdims=True)
        local = np.stack([u, bow_y, v], axis=1) + face[:, None] * (self.t / 2.0) * norm
        ct, st = math.cos(self.theta), math.sin(self.theta)
        y, z = local[:, 1], local[:, 2]
        out = np.empty((n, 3))
        out[:, 0] = local[:, 0]
        out[:, 1] = self.hy + y * ct + z * st
        out[:, 2] = self.hz - y * st + z * ct
        return out


def _chair_primitives(spec: ChairSpec) -> list[tuple[PartId, object]]:
    w, d, t = spec.seat_width, spec.seat_depth, spec.seat_thickness
    lh = spec.leg_height
    seat_top = lh + t
    prims: list[tuple[PartId, object]] = []

    prims.append((PartId.SEAT, _Box((0.0, 0.0, lh + t / 2.0), (w, d, t))))

    back_w = 0.96 * w
    hinge_y = d / 2.0 - 0.015
    prims.append((PartId.BACKREST, _BackSheet(
        back_w, spec.back_height, hinge_y, seat_top,
        spec.back_recline_deg, spec.back_curvature,
        bow_max=0.35 * back_w, thickness=0.03, overlap=t + 0.01)))

    top = lh + t / 2.0  # legs penetrate to the seat mid-plane
    if spec.leg_style == "straight4":
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                xt = sx * (w / 2.0 - 0.08 * w)
                yt = sy * (d / 2.0 - 0.08 * d)
                xb = sx * (w / 2.0 - 0.01 * w)
                yb = sy * (d / 2.0 - 0.01 * d)
                prims.append((PartId.LEGS, _Cylinder((xb, yb, 0.0), (xt, yt, top), 0.016)))
    elif spec.leg_style == "swivel5":
        prims.append((PartId.LEGS, _Cylinder((0, 0, 0.03), (0, 0, top), 0.025)))
        spoke_r = 0.34 * w
        for k in range(5):
            phi = math.pi / 2.0 + k * 2.0 * math.pi / 5.0
            end = (spoke_r * math.cos(phi), spoke_r * math.sin(phi), 0.012)
            prims.append((PartId.LEGS, _Cylinder((0, 0, 0.04), end, 0.008)))
    else:  # cantilever: floor rails overhanging the rear + front risers
        for s in (-1.0, 1.0):
            x = s * (w / 2.0 - 0.02)
            yf = -d / 2.0 + 0.02
            prims.append((PartId.LEGS, _Cylinder((x, yf, 0.02), (x, d / 2.0 + 0.04, 0.02), 0.016)))
            prims.append((PartId.LEGS, _Cylinder((x, yf, 0.02), (x, yf, top), 0.016)))
            prims.append((PartId.LEGS, _Cylinder((x, yf, top), (x, 0.0, top), 0.014)))

    if spec.armrest_style != "none":
        z_arm = seat_top + 0.18
        for s in (-1.0, 1.0):
            x = s * 0.46 * w  # inside the backrest half-width for any seat
            y_front = -d / 2.0 + 0.06
            if spec.armrest_style == "connected":
                # L-shape: front post, arm runs back to meet the (possibly
                # reclined) backrest plane
                y_end = hinge_y + (z_arm - seat_top) * math.tan(math.radians(spec.back_recline_deg)) + 0.03
                y_post = y_front
                thick = 0.03
            else:
                # T-shape: shorter, thicker pad floating free of the
                # backrest, supported by a single post under its middle
                y_end = y_front + 0.5 * (hinge_y - y_front)
                y_post = (y_front + y_end) / 2.0
                thick = 0.045
            mid = (y_front + y_end) / 2.0
            prims.append((PartId.ARMREST, _Box((x, mid, z_arm), (0.035, y_end - y_front, thick))))
            prims.append((PartId.ARMREST, _Cylinder(
                (x, y_post, seat_top - t / 2.0), (x, y_post, z_arm), 0.013)))
    return prims


def _chair_anchors(spec: ChairSpec) -> list[tuple[PartId, np.ndarray]]:
    """Joint samples guaranteeing part contact: for every structural joint a
    pair of surface points, one on each part, within the contact tolerance."""
    w, d, t = spec.seat_width, spec.seat_depth, spec.seat_thickness
    lh = spec.leg_height
    seat_top = lh + t
    hinge_y = d / 2.0 - 0.015
    theta = math.radians(spec.back_recline_deg)
    anchors: list[tuple[PartId, np.ndarray]] = []

    def pair(part_a, pt_a, part_b, pt_b):
        anchors.append((part_a, np.asarray(pt_a, dtype=float)))
        anchors.append((part_b, np.asarray(pt_b, dtype=float)))

    # legs meet the seat underside: leg lateral-surface point paired with the
    # same location on the seat bottom face
    if spec.leg_style == "straight4":
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                x = sx * (w / 2.0 - 0.08 * w)
                y = sy * (d / 2.0 - 0.08 * d)
                pair(PartId.LEGS, (x + 0.016, y, lh), PartId.SEAT, (x + 0.016, y, lh))
    elif spec.leg_style == "swivel5":
        pair(PartId.LEGS, (0.025, 0.0, lh), PartId.SEAT, (0.025, 0.0, lh))
    else:
        for s in (-1.0, 1.0):
            x = s * (w / 2.0 - 0.02)
            yf = -d / 2.0 + 0.02
            pair(PartId.LEGS, (x, yf + 0.02, lh), PartId.SEAT, (x, yf + 0.02, lh))

    # backrest sheet crosses the seat top face at its hinge line
    ct, st = math.cos(theta), math.sin(theta)
    bow_max = 0.35 * 0.96 * w
    for u in (-0.2 * w, 0.2 * w):
        rel = 2.0 * u / (0.96 * w)
        bow = -spec.back_curvature * bow_max * (1.0 - rel * rel)
        y_hinge = hinge_y + bow * ct
        pair(PartId.BACKREST, (u, y_hinge, seat_top - bow * st),
             PartId.SEAT, (u, y_hinge, seat_top))

    if spec.armrest_style != "none":
        z_arm = seat_top + 0.18
        for s in (-1.0, 1.0):
            x = s * 0.46 * w
            y_front = -d / 2.0 + 0.06
            if spec.armrest_style == "connected":
                y0 = y_front
            else:
                y0 = (y_front + y_front + 0.5 * (hinge_y - y_front)) / 2.0
            pair(PartId.ARMREST, (x + 0.013, y0, seat_top - 0.01),
                 PartId.SEAT, (x + 0.013, y0, seat_top))
            if spec.armrest_style == "connected":
                # arm rear end against the (possibly reclined) backrest sheet
                v0 = (z_arm - seat_top) / ct
                rel = 2.0 * x / (0.96 * w)
                bow = -spec.back_curvature * bow_max * (1.0 - rel * rel)
                y_sheet = hinge_y + bow * ct + v0 * st
                pair(PartId.ARMREST, (x, y_sheet + 0.015, z_arm),
                     PartId.BACKREST, (x, y_sheet, z_arm - bow * st))
    return anchors


def _allocate(areas: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder allocation of n samples proportional to areas."""
    quota = areas / areas.sum() * n
    counts = np.floor(quota).astype(int)
    rem = n - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:rem]] += 1
    return counts


def realize_with_transform(spec: ChairSpec, n_points: int, seed: int):
    """Sample ``n_points`` area-proportionally from the chair's part surfaces,
    label each point with its PartId, and normalize to the unit sphere.
    Returns (cloud, centroid, scale) so raw-unit rules can be checked against
    the stored cloud."""
    if n_points < 64:
        raise SpecError("n_points must be >= 64")
    prims = _chair_primitives(spec)
    anchors = _chair_anchors(spec)
    areas = np.array([p.area for _, p in prims])
    counts = _allocate(areas, n_points - len(anchors))
    rng = make_rng(seed, "realize")
    chunks = []
    labels = []
    for (part, prim), cnt in zip(prims, counts):
        if cnt == 0:
            continue
        chunks.append(prim.sample(rng, cnt))
        labels.append(np.full(cnt, int(part), dtype=np.int64))
    anchor_pts = np.stack([p for _, p in anchors])
    anchor_pts = anchor_pts + rng.normal(0.0, 0.002, size=anchor_pts.shape)
    chunks.append(anchor_pts)
    labels.append(np.array([int(part) for part, _ in anchors], dtype=np.int64))
    cloud = PointCloud(np.concatenate(chunks), np.concatenate(labels))
    return normalize_unit_sphere(cloud)


def realize_point_cloud(spec: ChairSpec, n_points: int, seed: int) -> PointCloud:
    cloud, _, _ = realize_with_transform(spec, n_points, seed)
    return cloud


# ---------------------------------------------------------------------------
# geometric recomputation of style attributes (label-rule consistency oracle)

AXIS_RADIUS_FACTOR = 0.15
SWIVEL_AXIS_FRACTION = 0.40
FLOOR_BAND_FRACTION = 0.12
CANTILEVER_FLOOR_FRACTION = 0.30
ARM_GAP_CONNECTED_MAX = 0.07
RECLINE_ANGLE_SPLIT_DEG = 15.0
BOW_SPLIT_FACTOR = 0.12


def recompute_attributes(cloud: PointCloud, scale: float) -> list[str]:
    """Re-derive the style attributes from the labeled geometry alone
    (plus the normalization scale for the raw-unit seat rule)."""
    if cloud.labels is None:
        raise GeometryError("recompute_attributes needs a labeled cloud")
    pts, lab = cloud.points, cloud.labels
    seat = pts[lab == PartId.SEAT]
    legs = pts[lab == PartId.LEGS]
    back = pts[lab == PartId.BACKREST]
    arm = pts[lab == PartId.ARMREST]
    out = []

    w_est = seat[:, 0].max() - seat[:, 0].min()
    axis_xy = seat[:, :2].mean(axis=0)

    rho = np.linalg.norm(legs[:, :2] - axis_xy, axis=1)
    f_axis = (rho <= AXIS_RADIUS_FACTOR * w_est).mean()
    z_min = pts[:, 2].min()
    leg_span = seat[:, 2].min() - z_min
    f_floor = (legs[:, 2] < z_min + FLOOR_BAND_FRACTION * leg_span).mean()
    if f_axis >= SWIVEL_AXIS_FRACTION:
        out.append("legs/swivel")
    elif f_floor >= CANTILEVER_FLOOR_FRACTION:
        out.append("legs/cantilever")
    else:
        out.append("legs/straight")

    if arm.shape[0] == 0:
        out.append("armrest/none")
    else:
        from . import _kernels

        _, sq = _kernels.cross_nn(np.ascontiguousarray(arm), np.ascontiguousarray(back))
        gap = math.sqrt(sq.min())
        out.append("armrest/connected" if gap <= ARM_GAP_CONNECTED_MAX else "armrest/disconnected")

    # principal direction of the backrest sheet in (y, z): recline angle
    yz = back[:, 1:] - back[:, 1:].mean(axis=0)
    cov = yz.T @ yz
    evals, evecs = np.linalg.eigh(cov)
    main = evecs[:, -1]
    angle = math.degrees(math.atan2(abs(main[0]), abs(main[1])))
    if angle > RECLINE_ANGLE_SPLIT_DEG:
        out.append("backrest/reclined")
    else:
        # fit y ~ a + b*z + c*x^2; the quadratic term recovers the bow depth
        # independently of the (small) tilt captured by b*z
        x = back[:, 0] - back[:, 0].mean()
        design = np.stack([np.ones_like(x), back[:, 2], x * x], axis=1)
        coef, *_ = np.linalg.lstsq(design, back[:, 1], rcond=None)
        half_w = 0.5 * (back[:, 0].max() - back[:, 0].min())
        bow = coef[2] * half_w * half_w
        out.append("backrest/curved" if bow > BOW_SPLIT_FACTOR * w_est else "backrest/upright")

    raw_w = w_est * scale
    t_est = (seat[:, 2].max() - seat[:, 2].min()) * scale
    if t_est / raw_w > SEAT_STUFFED_RATIO_MIN:
        out.append("seat/stuffed")
    elif raw_w <= SEAT_NARROW_MAX_WIDTH:
        out.append("seat/narrow")
    else:
        out.append("seat/wide")
    return sorted(out)


# ---------------------------------------------------------------------------
# dataset manifest


@dataclass
class ManifestEntry:
    object_id: str
    seed: int
    split: str
    spec: ChairSpec
    file: str
    attributes: list[str]
    centroid: list[float]
    scale: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        d = dict(d)
        d["spec"] = ChairSpec.from_dict(d["spec"])
        return cls(**d)


@dataclass
class DatasetManifest:
    seed: int
    object_class: str
    n_points: int
    style_weights: dict
    thresholds: dict
    entries: list[ManifestEntry] = field(default_factory=list)
    format_version: int = 1

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "seed": self.seed,
            "object_class": self.object_class,
            "n_points": self.n_points,
            "style_weights": self.style_weights,
            "thresholds": self.thresholds,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            seed=d["seed"],
            object_class=d["object_class"],
            n_points=d["n_points"],
            style_weights=d["style_weights"],
            thresholds=d["thresholds"],
            entries=[ManifestEntry.from_dict(e) for e in d["entries"]],
            format_version=d["format_version"],
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "DatasetManifest":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def ids(self, split: str | None = None) -> list[str]:
        return [e.object_id for e in self.entries if split is None or e.split == split]

    def entry(self, object_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.object_id == object_id:
                return e
        raise KeyError(object_id)


def attribute_thresholds() -> dict:
    return {
        "recline_deg": RECLINE_DEG_THRESHOLD,
        "curvature": CURVATURE_THRESHOLD,
        "seat_stuffed_ratio_min": SEAT_STUFFED_RATIO_MIN,
        "seat_narrow_max_width": SEAT_NARROW_MAX_WIDTH,
    }


def generate_dataset(out_dir: str | os.PathLike, seed: int, n_train: int,
                     n_holdout: int, n_points: int,
                     style_weights: dict | None = None,
                     cloud_format: str = "xyz") -> DatasetManifest:
    """Generate the chair dataset: clouds under ``out_dir``/clouds plus a
    manifest.json tying ids to specs, files, and true attributes."""
    weights = style_weights if style_weights is not None else default_style_weights()
    _validate_weights(weights)
    out_dir = os.fspath(out_dir)
    cloud_dir = os.path.join(out_dir, "clouds")
    os.makedirs(cloud_dir, exist_ok=True)
    manifest = DatasetManifest(
        seed=seed, object_class="chair", n_points=n_points,
        style_weights=weights, thresholds=attribute_thresholds())
    total = n_train + n_holdout
    for i in range(total):
        obj_seed = derive_seed(seed, "object", i)
        spec = sample_spec(obj_seed, weights)
        cloud, centroid, scale = realize_with_transform(spec, n_points, obj_seed)
        object_id = f"chair_{i:04d}"
        rel = os.path.join("clouds", f"{object_id}.{cloud_format}")
        write_cloud(os.path.join(out_dir, rel), cloud)
        manifest.entries.append(ManifestEntry(
            object_id=object_id,
            seed=obj_seed,
            split="train" if i < n_train else "holdout",
            spec=spec,
            file=rel,
            attributes=true_attributes(spec),
            centroid=[float(c) for c in centroid],
            scale=float(scale),
        ))
    manifest.save(os.path.join(out_dir, "manifest.json"))
    return manifest


def load_cloud(data_dir: str | os.PathLike, entry: ManifestEntry) -> PointCloud:
    return read_cloud(os.path.join(os.fspath(data_dir), entry.file))


def naive_part_mix(manifest: DatasetManifest, data_dir: str | os.PathLike,
                   n_out: int, seed: int,
                   forced_sources: dict[int, str] | None = None):
    """Chimera clouds: each part's points come from an independently chosen
    source object, concatenated with no connectivity repair, then resampled
    to the standard point count. Returns (clouds, source records)."""
    if len(manifest.entries) < 4:
        raise SpecError("part mixing needs at least 4 source objects")
    ids = manifest.ids()
    clouds = {e.object_id: load_cloud(data_dir, e) for e in manifest.entries}
    rng = make_rng(seed, "part-mix")
    outputs: list[PointCloud] = []
    records: list[dict] = []
    for k in range(n_out):
        sources = {}
        chunks = []
        labels = []
        for part in PartId:
            if forced_sources is not None:
                src_id = forced_sources[int(part)]
            else:
                src_id = ids[int(rng.integers(0, len(ids)))]
            sources[int(part)] = src_id
            src = clouds[src_id]
            mask = src.labels == int(part)
            if mask.sum() == 0:
                continue
            chunks.append(src.points[mask])
            labels.append(np.full(int(mask.sum()), int(part), dtype=np.int64))
        mixed = PointCloud(np.concatenate(chunks), np.concatenate(labels))
        mixed = resample(mixed, manifest.n_points, derive_seed(seed, "mix-resample", k))
        outputs.append(mixed)
        records.append({"mix_id": f"mix_{k:04d}", "sources": sources})
    return outputs, records
