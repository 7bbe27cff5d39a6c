"""Quantitative evaluation of edits: Semantic Localization Score and
Semantic Consistency Score, plus the multi-part flip analysis used by the
subclass-proxy ablation.

SLS for one edit is CD(edited part, original part) / CD(edited rest,
original rest); samples whose denominator vanishes are excluded from the
mean and counted separately rather than clamped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .directions import DirectionBank, SemanticDirection
from .discovery import sentinel_cloud
from .geometry import PointCloud, chamfer_distance, normalize_unit_sphere, resample
from .navigation import EditTerm, translate_latent
from .neural.models import BinaryClassifier, Decoder
from .neural.train import classify_clouds
from .rng import derive_seed, make_rng

DENOMINATOR_EPS = 1e-9

STATUS_OK = "ok"
STATUS_ZERO_OVER_ZERO = "zero_over_zero"
STATUS_INFINITE = "infinite_ratio"
STATUS_NO_PART_POINTS = "no_part_points"

LEVEL_OBJECT = "object"
LEVEL_PART = "part"


class MetricsError(ValueError):
    pass


@dataclass
class SlsSample:
    value: float
    status: str


def _sls_from_labels(original: np.ndarray, edited: np.ndarray,
                     lab_orig: np.ndarray, lab_edit: np.ndarray,
                     part: int) -> SlsSample:
    m_orig, m_edit = lab_orig == part, lab_edit == part
    if (m_orig.sum() == 0 or m_edit.sum() == 0
            or m_orig.all() or m_edit.all()):
        return SlsSample(float("nan"), STATUS_NO_PART_POINTS)
    num = chamfer_distance(original[m_orig], edited[m_edit])
    den = chamfer_distance(original[~m_orig], edited[~m_edit])
    if den < DENOMINATOR_EPS:
        if num < DENOMINATOR_EPS:
            return SlsSample(float("nan"), STATUS_ZERO_OVER_ZERO)
        return SlsSample(float("inf"), STATUS_INFINITE)
    return SlsSample(num / den, STATUS_OK)


def sls_single(original: np.ndarray, edited: np.ndarray, part: int,
               segment_fn) -> SlsSample:
    """Segment both clouds, split into the target part and its complement,
    and return the ratio of the two Chamfer distances."""
    return _sls_from_labels(original, edited, segment_fn(original),
                            segment_fn(edited), part)


@dataclass
class SlsReport:
    direction_id: str
    part: int
    alpha: float
    n_samples: int
    values: list[float] = field(default_factory=list)
    excluded: dict[str, int] = field(default_factory=dict)
    segmenter_id: str = ""

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")

    def to_dict(self) -> dict:
        return {
            "direction_id": self.direction_id,
            "part": self.part,
            "alpha": self.alpha,
            "n_samples": self.n_samples,
            "mean": self.mean,
            "values": [float(v) for v in self.values],
            "excluded": self.excluded,
            "segmenter_id": self.segmenter_id,
        }


def draw_probes(latents: np.ndarray, n_samples: int, seed: int) -> np.ndarray:
    """Seeded probe draw shared by SLS/SCS so that every direction is
    evaluated on the same latents."""
    rng = make_rng(seed, "probes")
    idx = rng.integers(0, len(latents), size=n_samples)
    return latents[idx]


@dataclass
class ProbeSet:
    """Seeded probe latents with their decoded clouds and segment labels
    cached once, since every direction is evaluated against the same
    originals."""
    latents: np.ndarray
    original_clouds: np.ndarray
    original_labels: list[np.ndarray]
    seed: int


def build_probe_set(probe_latents: np.ndarray, n_samples: int, seed: int,
                    decoder: Decoder, dec_params: dict, segment_fn) -> ProbeSet:
    if n_samples < 1:
        raise MetricsError("n_samples must be >= 1")
    latents = draw_probes(probe_latents, n_samples, seed)
    clouds = []
    labels = []
    for z in latents:
        cloud, _ = decoder.forward(dec_params, z[None])
        clouds.append(cloud[0])
        labels.append(segment_fn(cloud[0]))
    return ProbeSet(latents, np.stack(clouds), labels, seed)


def sls_expectation(direction: SemanticDirection, probes: ProbeSet,
                    alpha_sigma: float, decoder: Decoder, dec_params: dict,
                    bank: DirectionBank, segment_fn,
                    segmenter_id: str = "") -> SlsReport:
    """Mean SLS over the probe set translated by alpha_sigma DistStd units
    along one direction."""
    report = SlsReport(direction.direction_id, direction.part,
                       alpha_sigma, len(probes.latents), segmenter_id=segmenter_id)
    term = [EditTerm(direction.direction_id, alpha_sigma)]
    for i, z in enumerate(probes.latents):
        z_edit = translate_latent(z, term, bank)
        edited, _ = decoder.forward(dec_params, z_edit[None])
        edited = edited[0]
        original = probes.original_clouds[i]
        lab_orig = probes.original_labels[i]
        lab_edit = segment_fn(edited)
        sample = _sls_from_labels(original, edited, lab_orig, lab_edit, direction.part)
        if sample.status == STATUS_OK:
            report.values.append(sample.value)
        else:
            report.excluded[sample.status] = report.excluded.get(sample.status, 0) + 1
    return report


@dataclass
class ScsReport:
    semantic: str
    level: str
    alpha: float
    n_samples: int
    rate: float
    mean_probability: float
    classifier_id: str = ""
    excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "semantic": self.semantic,
            "level": self.level,
            "alpha": self.alpha,
            "n_samples": self.n_samples,
            "rate": self.rate,
            "mean_probability": self.mean_probability,
            "classifier_id": self.classifier_id,
            "excluded": self.excluded,
        }


def prepare_object_input(cloud: np.ndarray, n_points: int, seed: int) -> np.ndarray:
    pc = resample(PointCloud(cloud), n_points, seed)
    normalized, _, _ = normalize_unit_sphere(pc)
    return normalized.points


ABSENT_PART_FRACTION = 0.02
STRAY_RADIUS_FACTOR = 2.5


def prepare_part_input(cloud: np.ndarray, labels: np.ndarray, part: int,
                       n_points: int, seed: int) -> np.ndarray:
    """Crop one part, drop stray mislabeled points, resample, re-normalize.

    A part holding less than ABSENT_PART_FRACTION of the cloud counts as
    absent and yields the sentinel zero cloud: absence is itself a
    classifiable state, matching how the part latent bank encodes empty
    segments. Points farther than STRAY_RADIUS_FACTOR times the median
    radius from the crop centroid are discarded first; a single stray would
    otherwise dominate the unit-sphere normalization."""
    mask = labels == part
    if mask.sum() < max(1, round(ABSENT_PART_FRACTION * len(labels))):
        return sentinel_cloud(n_points)
    pts = cloud[mask]
    center = pts.mean(axis=0)
    radius = np.linalg.norm(pts - center, axis=1)
    keep = radius <= STRAY_RADIUS_FACTOR * max(np.median(radius), 1e-12)
    if keep.sum() >= max(1, round(ABSENT_PART_FRACTION * len(labels))):
        pts = pts[keep]
    if np.allclose(pts, pts[0]):
        return sentinel_cloud(n_points)
    pc = resample(PointCloud(pts), n_points, seed)
    normalized, _, _ = normalize_unit_sphere(pc)
    return normalized.points


def scs(direction: SemanticDirection, level: str, classifier: BinaryClassifier,
        cls_params: dict, probes: ProbeSet, alpha_sigma: float,
        decoder: Decoder, dec_params: dict, bank: DirectionBank, segment_fn,
        classifier_id: str = "", crop_part: int | None = None) -> ScsReport:
    """Fraction of edited probes the semantic classifier accepts (threshold
    0.5). Part level crops the edited cloud to the segmenter-assigned part
    (``crop_part`` overrides the direction's own part, for cross-semantic
    controls); the mean predicted probability is reported alongside the
    rate."""
    if level not in (LEVEL_OBJECT, LEVEL_PART):
        raise MetricsError(f"unknown level {level!r}")
    term = [EditTerm(direction.direction_id, alpha_sigma)]
    part = direction.part if crop_part is None else crop_part
    inputs = []
    n_in = classifier.arch.n_points
    for i, z in enumerate(probes.latents):
        z_edit = translate_latent(z, term, bank)
        edited, _ = decoder.forward(dec_params, z_edit[None])
        edited = edited[0]
        sub_seed = derive_seed(probes.seed, "scs-input", direction.direction_id, i)
        if level == LEVEL_OBJECT:
            inputs.append(prepare_object_input(edited, n_in, sub_seed))
        else:
            labels = segment_fn(edited)
            inputs.append(prepare_part_input(edited, labels, part, n_in, sub_seed))
    probs = classify_clouds(classifier, cls_params, inputs)
    return ScsReport(
        semantic=direction.semantic,
        level=level,
        alpha=alpha_sigma,
        n_samples=len(probes.latents),
        rate=float((probs > 0.5).mean()),
        mean_probability=float(probs.mean()),
        classifier_id=classifier_id,
    )


def positive_rate(classifier: BinaryClassifier, cls_params: dict,
                  clouds: list[np.ndarray]) -> float:
    probs = classify_clouds(classifier, cls_params, clouds)
    return float((probs > 0.5).mean())


def multi_part_flip_rate(direction: SemanticDirection, probe_latents: np.ndarray,
                         alpha_sigma: float, decoder: Decoder, dec_params: dict,
                         bank: DirectionBank, part_classifiers: dict,
                         n_samples: int, seed: int) -> float:
    """Fraction of edits that flip object-level classifier decisions in two
    or more different parts at once. ``part_classifiers`` maps semantic name
    to (part, classifier, params)."""
    probes = draw_probes(probe_latents, n_samples, seed)
    term = [EditTerm(direction.direction_id, alpha_sigma)]
    multi = 0
    for i, z in enumerate(probes):
        z_edit = translate_latent(z, term, bank)
        original, _ = decoder.forward(dec_params, z[None])
        edited, _ = decoder.forward(dec_params, z_edit[None])
        sub_seed = derive_seed(seed, "flip-input", direction.direction_id, i)
        parts_changed = set()
        for name, (part, classifier, params) in part_classifiers.items():
            n_in = classifier.arch.n_points
            x_orig = prepare_object_input(original[0], n_in, sub_seed)
            x_edit = prepare_object_input(edited[0], n_in, sub_seed)
            p = classify_clouds(classifier, params, [x_orig, x_edit])
            if (p[0] > 0.5) != (p[1] > 0.5):
                parts_changed.add(part)
        if len(parts_changed) >= 2:
            multi += 1
    return multi / len(probes)
