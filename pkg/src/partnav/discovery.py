"""Weakly supervised discovery of part-level shape semantics.

Per-part point subsets are re-normalized, encoded into the part latent
space, and clustered with Ward-linkage agglomeration; the cut is chosen by
silhouette over a candidate range and undersized clusters are merged into
their nearest neighbor. Ties everywhere resolve toward the lowest member id
so the whole procedure is deterministic given the bank order.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud, normalize_unit_sphere, resample
from .neural.models import Encoder
from .rng import derive_seed
from .synthgen import DatasetManifest, PartId, load_cloud


class DiscoveryError(ValueError):
    pass


SENTINEL_NAME = "empty-part"


def sentinel_cloud(n_points: int) -> np.ndarray:
    """Stand-in for an absent part: all points at the origin. Absence then
    forms its own tight cluster in the part latent space."""
    return np.zeros((n_points, 3))


@dataclass
class BankEntry:
    object_id: str
    part: int
    latent: np.ndarray


@dataclass
class PartLatentBank:
    checkpoint_hash: str
    part_points: int
    entries: list[BankEntry] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    format_version: int = 1

    def part_matrix(self, part: int) -> tuple[list[str], np.ndarray]:
        """(object ids, latent matrix) for one part, in bank order."""
        ids = [e.object_id for e in self.entries if e.part == part]
        mat = np.stack([e.latent for e in self.entries if e.part == part])
        return ids, mat

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "checkpoint_hash": self.checkpoint_hash,
            "part_points": self.part_points,
            "entries": [
                {"object_id": e.object_id, "part": e.part,
                 "latent": [float(x) for x in e.latent]}
                for e in self.entries
            ],
            "errors": self.errors,
        }

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PartLatentBank":
        with open(path) as fh:
            d = json.load(fh)
        bank = cls(d["checkpoint_hash"], d["part_points"],
                   errors=list(d.get("errors", [])),
                   format_version=d["format_version"])
        bank.entries = [
            BankEntry(e["object_id"], e["part"], np.asarray(e["latent"]))
            for e in d["entries"]
        ]
        return bank


def part_cloud_for_encoding(cloud: PointCloud, part: int, part_points: int,
                            seed: int) -> np.ndarray:
    """Extract one part, resample to the part input size, re-normalize to the
    unit sphere (clustering should reflect shape, not global scale). Absent
    parts yield the sentinel cloud."""
    if cloud.labels is None:
        raise DiscoveryError("labeled cloud required")
    mask = cloud.labels == part
    if mask.sum() == 0:
        return sentinel_cloud(part_points)
    part_pc = cloud.subset(mask)
    part_pc = resample(part_pc, part_points, seed)
    normalized, _, _ = normalize_unit_sphere(part_pc)
    return normalized.points


def build_part_latent_bank(manifest: DatasetManifest, data_dir, encoder: Encoder,
                           enc_params: dict, checkpoint_hash: str,
                           part_points: int, seed: int,
                           split: str | None = None) -> PartLatentBank:
    """Encode every (object, part) pair of the manifest into the part latent
    space. Unreadable objects are recorded in the error list and skipped."""
    bank = PartLatentBank(checkpoint_hash, part_points)
    pending_ids: list[tuple[str, int]] = []
    pending_clouds: list[np.ndarray] = []
    for entry in manifest.entries:
        if split is not None and entry.split != split:
            continue
        try:
            cloud = load_cloud(data_dir, entry)
        except Exception as exc:  # noqa: BLE001 - per-entry error list
            bank.errors.append(f"{entry.object_id}: {exc}")
            continue
        for part in PartId:
            pts = part_cloud_for_encoding(
                cloud, int(part), part_points,
                derive_seed(seed, "bank", entry.object_id, int(part)))
            pending_ids.append((entry.object_id, int(part)))
            pending_clouds.append(pts)
    for start in range(0, len(pending_clouds), 128):
        x = np.stack(pending_clouds[start:start + 128])
        z, _ = encoder.forward(enc_params, x)
        for (obj, part), latent in zip(pending_ids[start:start + 128], z):
            bank.entries.append(BankEntry(obj, part, latent))
    return bank


# ---------------------------------------------------------------------------
# silhouette


def silhouette_score(points: np.ndarray, labels: np.ndarray,
                     dist: np.ndarray | None = None) -> float:
    """Mean over points of (b - a) / max(a, b) on euclidean distances.
    Singleton clusters (and zero a=b) score 0 by convention."""
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise DiscoveryError("silhouette needs at least 2 clusters")
    if dist is None:
        diff = points[:, None, :] - points[None, :, :]
        dist = np.sqrt((diff * diff).sum(-1))
    n = labels.shape[0]
    scores = np.zeros(n)
    masks = {c: labels == c for c in uniq}
    for i in range(n):
        own = masks[labels[i]]
        n_own = own.sum()
        if n_own == 1:
            scores[i] = 0.0
            continue
        a = dist[i][own].sum() / (n_own - 1)
        b = np.inf
        for c in uniq:
            if c == labels[i]:
                continue
            b = min(b, dist[i][masks[c]].mean())
        m = max(a, b)
        scores[i] = 0.0 if m == 0.0 else (b - a) / m
    return float(scores.mean())


# ---------------------------------------------------------------------------
# Ward-linkage agglomeration


def _ward_merge_sequence(points: np.ndarray):
    """Full Ward merge sequence via Lance-Williams updates on squared
    euclidean distances. Ties pick the row-major smallest (i, j), which is
    the pair with the lowest member ids since a merged cluster keeps its
    lowest slot. Yields (labels, k) snapshots from n down to 2."""
    n = points.shape[0]
    sq = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    d = sq / 2.0  # Ward objective: n_i*n_j/(n_i+n_j) * ||ci-cj||^2; singletons: ||^2/2
    np.fill_diagonal(d, np.inf)
    d[np.tril_indices(n)] = np.inf
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    labels = np.arange(n)
    snapshots = {}
    k = n
    while k > 2:
        flat = np.argmin(d)
        i, j = divmod(int(flat), n)
        # Lance-Williams Ward update against every other active cluster
        ni, nj = sizes[i], sizes[j]
        m = np.flatnonzero(active)
        m = m[(m != i) & (m != j)]
        if m.size:
            lo_i, hi_i = np.minimum(m, i), np.maximum(m, i)
            lo_j, hi_j = np.minimum(m, j), np.maximum(m, j)
            nm = sizes[m]
            dij = d[i, j]
            new = ((ni + nm) * d[lo_i, hi_i] + (nj + nm) * d[lo_j, hi_j]
                   - nm * dij) / (ni + nj + nm)
            d[lo_i, hi_i] = new
        active[j] = False
        sizes[i] = ni + nj
        d[j, :] = np.inf
        d[:, j] = np.inf
        labels[labels == j] = i
        k -= 1
        if k <= 8:
            snapshots[k] = labels.copy()
    return snapshots


@dataclass
class SemanticCluster:
    part: int
    cluster_id: int
    member_ids: list[str]
    centroid: np.ndarray
    size_fraction: float
    name: str = ""
    majority_label: str = ""
    purity: float = 0.0

    def to_dict(self) -> dict:
        return {
            "part": self.part,
            "cluster_id": self.cluster_id,
            "member_ids": self.member_ids,
            "centroid": [float(x) for x in self.centroid],
            "size_fraction": self.size_fraction,
            "name": self.name,
            "majority_label": self.majority_label,
            "purity": self.purity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticCluster":
        return cls(d["part"], d["cluster_id"], list(d["member_ids"]),
                   np.asarray(d["centroid"]), d["size_fraction"], d["name"],
                   d["majority_label"], d["purity"])


@dataclass(frozen=True)
class ClusteringConfig:
    """Ward cut selection: silhouette-maximizing K among candidates whose
    largest cluster stays within ``max_fraction`` of the population (the
    observed operating range of part-semantic clusters is roughly 7%-50%);
    if no candidate satisfies the envelope the raw silhouette maximum is
    used. Undersized clusters are folded afterwards."""

    k_min: int = 2
    k_max: int = 8
    min_fraction: float = 0.05
    max_fraction: float = 0.5
    min_size_floor: int = 20
    # parsimony: the smallest K whose silhouette is within this margin of
    # the best eligible K wins, so near-tied finer cuts don't split a
    # semantic into sub-styles
    selection_margin: float = 0.02

    def min_size(self, n: int) -> int:
        return max(self.min_size_floor, int(np.ceil(self.min_fraction * n)))

    def to_dict(self) -> dict:
        return {"k_min": self.k_min, "k_max": self.k_max,
                "min_fraction": self.min_fraction,
                "max_fraction": self.max_fraction,
                "min_size_floor": self.min_size_floor,
                "selection_margin": self.selection_margin}


def _merge_small_clusters(labels: np.ndarray, points: np.ndarray, min_size: int) -> np.ndarray:
    labels = labels.copy()
    while True:
        uniq, counts = np.unique(labels, return_counts=True)
        if uniq.size <= 1:
            return labels
        small = uniq[counts < min_size]
        if small.size == 0:
            return labels
        # smallest offender first; ties to the lowest cluster id
        order = np.lexsort((uniq, counts))
        victim = None
        for idx in order:
            if counts[idx] < min_size:
                victim = uniq[idx]
                break
        centroids = {c: points[labels == c].mean(axis=0) for c in uniq}
        best, best_d = -1, np.inf
        for c in uniq:
            if c == victim:
                continue
            dd = float(((centroids[victim] - centroids[c]) ** 2).sum())
            if dd < best_d or (dd == best_d and best >= 0 and c < best):
                best, best_d = c, dd
        labels[labels == victim] = best


def agglomerate(bank: PartLatentBank, part: int, config: ClusteringConfig,
                ) -> tuple[list[SemanticCluster], dict]:
    """Ward dendrogram cut at the silhouette-maximizing K (ties to the
    smaller K), then undersized clusters are folded into their nearest
    cluster by centroid distance. Returns (clusters, diagnostics)."""
    ids, points = bank.part_matrix(part)
    n = len(ids)
    min_size = config.min_size(n)
    if n < 2 * min_size:
        raise DiscoveryError(
            f"part {PartId(part).name}: {n} samples < 2x min cluster size {min_size}")
    snapshots = _ward_merge_sequence(points)
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff * diff).sum(-1))
    scores = {}
    eligible = {}
    for k in range(config.k_min, config.k_max + 1):
        if k not in snapshots:
            continue
        scores[k] = silhouette_score(points, snapshots[k], dist)
        _, counts = np.unique(snapshots[k], return_counts=True)
        eligible[k] = counts.max() / n <= config.max_fraction
    candidates = [k for k in scores if eligible[k]] or list(scores)
    top = max(scores[k] for k in candidates)
    best_k = min(k for k in candidates
                 if scores[k] >= top - config.selection_margin)
    labels = _merge_small_clusters(snapshots[best_k], points, min_size)
    clusters = []
    final_labels = np.zeros(n, dtype=int)
    for cid, c in enumerate(sorted(np.unique(labels))):
        mask = labels == c
        final_labels[mask] = cid
        clusters.append(SemanticCluster(
            part=part,
            cluster_id=cid,
            member_ids=[ids[i] for i in np.flatnonzero(mask)],
            centroid=points[mask].mean(axis=0),
            size_fraction=float(mask.sum()) / n,
        ))
    diagnostics = {
        "chosen_k": int(best_k),
        "silhouette_by_k": {int(k): float(v) for k, v in scores.items()},
        "size_envelope_by_k": {int(k): bool(v) for k, v in eligible.items()},
        "silhouette": float(silhouette_score(points, final_labels, dist))
        if len(clusters) > 1 else 0.0,
        "min_size": min_size,
    }
    return clusters, diagnostics


def name_clusters(clusters: list[SemanticCluster], oracle: dict[str, str]) -> None:
    """Assign each cluster the majority oracle attribute of its members (the
    desk-scale stand-in for human inspection) plus its purity. Name
    collisions within a part get a numeric suffix."""
    seen: dict[str, int] = {}
    for cl in clusters:
        votes: dict[str, int] = {}
        for obj in cl.member_ids:
            lab = oracle[obj]
            votes[lab] = votes.get(lab, 0) + 1
        majority = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        cl.majority_label = majority[0]
        cl.purity = majority[1] / len(cl.member_ids)
        name = majority[0]
        if name in seen:
            seen[name] += 1
            name = f"{name}-{seen[name]}"
        else:
            seen[name] = 1
        cl.name = name


def save_clusters(path, per_part: dict[int, tuple[list[SemanticCluster], dict]],
                  bank_hash: str = "") -> None:
    doc = {
        "format_version": 1,
        "bank_checkpoint_hash": bank_hash,
        "parts": {
            str(part): {
                "diagnostics": diag,
                "clusters": [c.to_dict() for c in clusters],
            }
            for part, (clusters, diag) in per_part.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def load_clusters(path) -> dict[int, tuple[list[SemanticCluster], dict]]:
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    for part, body in doc["parts"].items():
        out[int(part)] = (
            [SemanticCluster.from_dict(c) for c in body["clusters"]],
            body["diagnostics"],
        )
    return out
