"""Semantic directions in the object latent space.

A discovered cluster becomes a labeled example set (positives = members,
negatives = everything else), a linear SVM separates them, and the unit
normal of its hyperplane is the semantic direction. Two unsupervised
baselines are provided for comparison: principal components of the latent
population and the eigenvectors of the decoder's first-layer weight Gram
matrix, both matched to semantics by scoring rather than by hand.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .discovery import SemanticCluster
from .rng import make_rng
from .synthgen import PartId

PROVENANCE_SEMANTIC = "semantic_svm"
PROVENANCE_PCA = "pca_baseline"
PROVENANCE_CLOSEDFORM = "weight_factorization"


class DirectionError(ValueError):
    pass


@dataclass(frozen=True)
class SvmConfig:
    lambda_reg: float = 1e-3
    epochs: int = 2000
    lr: float = 0.1
    holdout_fraction: float = 0.2

    def to_dict(self) -> dict:
        return {"lambda_reg": self.lambda_reg, "epochs": self.epochs,
                "lr": self.lr, "holdout_fraction": self.holdout_fraction}


@dataclass
class LabeledLatentSet:
    semantic: str
    part: int
    train_pos: np.ndarray
    train_neg: np.ndarray
    heldout_pos: np.ndarray
    heldout_neg: np.ndarray

    @property
    def n_total(self) -> int:
        return (len(self.train_pos) + len(self.train_neg)
                + len(self.heldout_pos) + len(self.heldout_neg))

    def flipped(self) -> "LabeledLatentSet":
        """Same examples with the class labels exchanged."""
        return LabeledLatentSet(
            semantic=f"not-{self.semantic}", part=self.part,
            train_pos=self.train_neg, train_neg=self.train_pos,
            heldout_pos=self.heldout_neg, heldout_neg=self.heldout_pos,
        )


@dataclass
class SemanticDirection:
    direction_id: str
    part: int
    semantic: str
    normal: np.ndarray
    bias: float
    train_accuracy: float
    heldout_accuracy: float
    dist_std: float
    provenance: str

    def signed_distance(self, z: np.ndarray) -> np.ndarray | float:
        return z @ self.normal + self.bias

    def to_dict(self) -> dict:
        return {
            "id": self.direction_id,
            "part": self.part,
            "semantic": self.semantic,
            "normal": [float(x) for x in self.normal],
            "bias": float(self.bias),
            "train_acc": float(self.train_accuracy),
            "heldout_acc": float(self.heldout_accuracy),
            "dist_std": float(self.dist_std),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticDirection":
        return cls(d["id"], d["part"], d["semantic"], np.asarray(d["normal"]),
                   d["bias"], d["train_acc"], d["heldout_acc"], d["dist_std"],
                   d["provenance"])


@dataclass
class DirectionBank:
    space_id: str
    checkpoint_hash: str
    directions: list[SemanticDirection] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    format_version: int = 1

    def __post_init__(self):
        dims = {d.normal.shape[0] for d in self.directions}
        if len(dims) > 1:
            raise DirectionError(f"mixed direction dimensions: {dims}")

    def get(self, direction_id: str) -> SemanticDirection:
        for d in self.directions:
            if d.direction_id == direction_id:
                return d
        raise KeyError(direction_id)

    def ids(self) -> list[str]:
        return [d.direction_id for d in self.directions]

    def find_semantic(self, semantic: str) -> SemanticDirection:
        """First direction carrying the given semantic attribute (ids are
        unique, semantics may repeat when two clusters share a majority
        label)."""
        for d in self.directions:
            if d.semantic == semantic:
                return d
        raise KeyError(semantic)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "space_id": self.space_id,
            "checkpoint_hash": self.checkpoint_hash,
            "metadata": self.metadata,
            "directions": [d.to_dict() for d in self.directions],
        }

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "DirectionBank":
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            space_id=d["space_id"],
            checkpoint_hash=d["checkpoint_hash"],
            directions=[SemanticDirection.from_dict(x) for x in d["directions"]],
            metadata=d.get("metadata", {}),
            format_version=d["format_version"],
        )


def build_examples(cluster: SemanticCluster, object_latents: dict[str, np.ndarray],
                   seed: int, holdout_fraction: float = 0.2) -> LabeledLatentSet:
    """Positives = the cluster members' object latents, negatives = all other
    objects; stratified 80/20 train/heldout split, seeded."""
    missing = [m for m in cluster.member_ids if m not in object_latents]
    if missing:
        raise DirectionError(f"missing object latents for: {missing[:5]}"
                             + ("..." if len(missing) > 5 else ""))
    member_set = set(cluster.member_ids)
    pos_ids = sorted(member_set)
    neg_ids = sorted(k for k in object_latents if k not in member_set)
    if not neg_ids:
        raise DirectionError(
            f"cluster {cluster.name or cluster.cluster_id} covers every object; "
            "no negatives left")
    rng = make_rng(seed, "svm-split", cluster.part, cluster.cluster_id)

    def split(ids):
        idx = rng.permutation(len(ids))
        n_hold = max(1, int(round(holdout_fraction * len(ids))))
        hold = [ids[i] for i in idx[:n_hold]]
        train = [ids[i] for i in idx[n_hold:]]
        return train, hold

    pos_tr, pos_ho = split(pos_ids)
    neg_tr, neg_ho = split(neg_ids)
    take = lambda ids: np.stack([object_latents[i] for i in ids])
    return LabeledLatentSet(
        semantic=cluster.name or f"part{cluster.part}/cluster{cluster.cluster_id}",
        part=cluster.part,
        train_pos=take(pos_tr), train_neg=take(neg_tr),
        heldout_pos=take(pos_ho), heldout_neg=take(neg_ho),
    )


def fit_linear_svm(examples: LabeledLatentSet, config: SvmConfig = SvmConfig(),
                   population: np.ndarray | None = None,
                   provenance: str = PROVENANCE_SEMANTIC) -> SemanticDirection:
    """Deterministic full-batch subgradient descent on the class-balanced
    hinge loss with L2 regularization and 1/t learning-rate decay. The
    returned normal is unit length and oriented so positives sit on the
    positive side; ``population`` (defaults to all example latents) sets the
    signed-distance std used for alpha scaling."""
    if len(examples.train_pos) == 0 or len(examples.train_neg) == 0:
        raise DirectionError("both classes must be non-empty in the train split")
    # center and isotropically rescale so the fixed step size works at any
    # latent scale; a scalar scale keeps the hyperplane's raw-space normal
    # geometrically identical to a raw-space fit (only the effective
    # hyperparameters change), and decisions stay covariant under global
    # latent rescaling. Moments are accumulated per class and then added
    # (commutative), so exchanging the classes reproduces the exact same
    # standardization and label-flip symmetry stays bit-exact.
    n_all = len(examples.train_pos) + len(examples.train_neg)
    mu = (examples.train_pos.sum(axis=0) + examples.train_neg.sum(axis=0)) / n_all
    sq = (((examples.train_pos - mu) ** 2).sum()
          + ((examples.train_neg - mu) ** 2).sum())
    dim = examples.train_pos.shape[1]
    scale = max(np.sqrt(sq / (n_all * dim)), 1e-9)
    xp = (examples.train_pos - mu) / scale
    xn = (examples.train_neg - mu) / scale
    w = np.zeros(dim)
    b = 0.0
    for t in range(1, config.epochs + 1):
        lr = config.lr / np.sqrt(t)
        active_p = (xp @ w + b) < 1.0
        active_n = (-(xn @ w + b)) < 1.0
        # structured as reg - (pos_pull - neg_pull) so that swapping the two
        # classes negates the update bit-exactly (label-flip symmetry)
        gpos = 0.5 * xp[active_p].sum(axis=0) / len(xp)
        gneg = 0.5 * xn[active_n].sum(axis=0) / len(xn)
        gw = 2.0 * config.lambda_reg * w - (gpos - gneg)
        gb = -(0.5 * active_p.sum() / len(xp) - 0.5 * active_n.sum() / len(xn))
        w -= lr * gw
        b -= lr * gb
    # back to raw latent coordinates: w.(x-mu)/s + b = (w/s).x + (b - w.mu/s)
    w_raw = w / scale
    b_raw = b - float((w / scale) @ mu)
    norm = float(np.linalg.norm(w_raw))
    if norm == 0.0 or not np.isfinite(norm):
        raise DirectionError("SVM failed to find a separating direction "
                             f"for {examples.semantic} (|w|={norm})")
    normal = w_raw / norm
    bias = b_raw / norm

    def acc(pos, neg):
        hits = int((pos @ normal + bias > 0).sum()) + int((neg @ normal + bias <= 0).sum())
        return hits / (len(pos) + len(neg))

    if population is None:
        population = np.concatenate([examples.train_pos, examples.train_neg,
                                     examples.heldout_pos, examples.heldout_neg])
    dist_std = float((population @ normal + bias).std())
    return SemanticDirection(
        direction_id=examples.semantic,
        part=examples.part,
        semantic=examples.semantic,
        normal=normal,
        bias=bias,
        train_accuracy=acc(xp, xn),
        heldout_accuracy=acc(examples.heldout_pos, examples.heldout_neg),
        dist_std=dist_std,
        provenance=provenance,
    )


def cosine_similarity_matrix(bank: DirectionBank) -> np.ndarray:
    if not bank.directions:
        raise DirectionError("empty direction bank")
    q = np.stack([d.normal for d in bank.directions])
    m = q @ q.T
    np.fill_diagonal(m, 1.0)
    return m


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Resolve eigenvector sign ambiguity: largest-magnitude entry positive."""
    out = vectors.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def _package_unnamed(vectors: np.ndarray, eigenvalues: np.ndarray,
                     latents: np.ndarray | None, prefix: str,
                     provenance: str, space_id: str, checkpoint_hash: str) -> DirectionBank:
    directions = []
    for i, vec in enumerate(vectors):
        if latents is not None:
            proj = latents @ vec
            bias = -float(proj.mean())
            dist_std = float(proj.std())
        else:
            bias, dist_std = 0.0, 1.0
        directions.append(SemanticDirection(
            direction_id=f"{prefix}/{i:02d}",
            part=-1,
            semantic=f"{prefix}-component-{i:02d}",
            normal=vec,
            bias=bias,
            train_accuracy=float("nan"),
            heldout_accuracy=float("nan"),
            dist_std=dist_std,
            provenance=provenance,
        ))
    return DirectionBank(
        space_id=space_id,
        checkpoint_hash=checkpoint_hash,
        directions=directions,
        metadata={"eigenvalues": [float(v) for v in eigenvalues]},
    )


def pca_baseline_directions(object_latents: np.ndarray, m: int,
                            space_id: str = "", checkpoint_hash: str = "") -> DirectionBank:
    """Top-m principal components of the mean-centered latents via
    eigen-decomposition of the covariance matrix."""
    n, dim = object_latents.shape
    if m > dim:
        raise DirectionError(f"requested {m} components > dimension {dim}")
    if n < m:
        raise DirectionError(f"need at least {m} samples, got {n}")
    centered = object_latents - object_latents.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:m]
    comps = _fix_signs(evecs[:, order].T)
    return _package_unnamed(comps, evals[order], object_latents, "pca",
                            PROVENANCE_PCA, space_id, checkpoint_hash)


def closedform_baseline_directions(first_layer_weight: np.ndarray, m: int,
                                   object_latents: np.ndarray | None = None,
                                   space_id: str = "", checkpoint_hash: str = "") -> DirectionBank:
    """Top-m eigenvectors of the Gram matrix of the decoder's first layer
    (right singular vectors of the latent-to-hidden map)."""
    dim = first_layer_weight.shape[0]
    if m > dim:
        raise DirectionError(f"requested {m} directions > latent dimension {dim}")
    gram = first_layer_weight @ first_layer_weight.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals)[::-1][:m]
    comps = _fix_signs(evecs[:, order].T)
    return _package_unnamed(comps, evals[order], object_latents, "wf",
                            PROVENANCE_CLOSEDFORM, space_id, checkpoint_hash)


@dataclass
class BaselineMatch:
    semantic: str
    direction_id: str
    sign: int
    score: float


def match_baselines_to_semantics(baseline: DirectionBank, semantics: list[str],
                                 eval_fn) -> dict[str, BaselineMatch]:
    """For each semantic pick the (baseline direction, sign) maximizing
    ``eval_fn(semantic, direction, sign)`` — the baseline's upper bound.
    Ties go to the lower direction index and the positive sign."""
    if not baseline.directions:
        raise DirectionError("empty baseline bank")
    matches = {}
    for semantic in semantics:
        best = None
        for direction in baseline.directions:
            for sign in (1, -1):
                score = float(eval_fn(semantic, direction, sign))
                if best is None or score > best.score:
                    best = BaselineMatch(semantic, direction.direction_id, sign, score)
        matches[semantic] = best
    return matches


def matched_direction(bank: DirectionBank, match: BaselineMatch,
                      semantic_part: int) -> SemanticDirection:
    """Materialize a matched baseline direction under the semantic's name,
    with the sign folded in."""
    base = bank.get(match.direction_id)
    return SemanticDirection(
        direction_id=f"{base.provenance}:{match.semantic}",
        part=semantic_part,
        semantic=match.semantic,
        normal=match.sign * base.normal,
        bias=match.sign * base.bias,
        train_accuracy=float("nan"),
        heldout_accuracy=float("nan"),
        dist_std=base.dist_std,
        provenance=base.provenance,
    )


def part_of_semantic(semantic: str) -> int:
    """Map a 'part/variant' semantic name to its PartId."""
    prefix = semantic.split("/", 1)[0]
    return int(PartId[prefix.upper()])
