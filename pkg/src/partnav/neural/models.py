"""Point-cloud network definitions with hand-written backward passes.

Four small architectures share the same trunk idiom: a per-point shared MLP
followed by a coordinate-wise max-pool, which makes every model exactly
permutation invariant (encoder, classifier) or equivariant (segmenter).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import make_rng
from .core import (init_linear, leaky, leaky_backward, linear,
                   linear_backward, max_pool_backward, max_pool_points)


class ShapeMismatch(ValueError):
    """Input does not match the configured architecture."""


def _trunk_forward(params: dict, x: np.ndarray, n_layers: int):
    """Shared per-point MLP with leaky activations; returns the activated
    features and the caches needed for backward."""
    h = x
    pre = []
    inputs = []
    for i in range(n_layers):
        inputs.append(h)
        a = linear(params, f"pt{i}", h)
        pre.append(a)
        h = leaky(a)
    return h, (pre, inputs)


def _trunk_backward(params: dict, grads: dict, cache, dh: np.ndarray) -> np.ndarray:
    pre, inputs = cache
    for i in reversed(range(len(pre))):
        da = leaky_backward(pre[i], dh)
        dh = linear_backward(params, grads, f"pt{i}", inputs[i], da)
    return dh


@dataclass(frozen=True)
class EncoderArch:
    point_dims: tuple[int, ...] = (3, 64, 128, 128)
    latent_dim: int = 64
    n_points: int = 512

    def to_dict(self) -> dict:
        return {"point_dims": list(self.point_dims), "latent_dim": self.latent_dim,
                "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderArch":
        return cls(tuple(d["point_dims"]), d["latent_dim"], d["n_points"])


class Encoder:
    """Permutation-invariant cloud encoder: per-point MLP, max-pool, linear
    head to the latent code."""

    def __init__(self, arch: EncoderArch):
        self.arch = arch

    def init_params(self, seed: int) -> dict:
        rng = make_rng(seed, "encoder-init")
        params: dict = {}
        dims = self.arch.point_dims
        for i in range(len(dims) - 1):
            init_linear(params, rng, f"pt{i}", dims[i], dims[i + 1])
        init_linear(params, rng, "head", dims[-1], self.arch.latent_dim)
        return params

    def forward(self, params: dict, x: np.ndarray):
        if x.ndim != 3 or x.shape[1] != self.arch.n_points or x.shape[2] != 3:
            raise ShapeMismatch(
                f"encoder expects (B, {self.arch.n_points}, 3), got {x.shape}")
        feat, trunk_cache = _trunk_forward(params, x, len(self.arch.point_dims) - 1)
        pooled, arg = max_pool_points(feat)
        z = linear(params, "head", pooled)
        return z, (trunk_cache, feat.shape, arg, pooled)

    def backward(self, params: dict, cache, dz: np.ndarray) -> dict:
        trunk_cache, feat_shape, arg, pooled = cache
        grads: dict = {}
        dpooled = linear_backward(params, grads, "head", pooled, dz)
        dfeat = max_pool_backward(feat_shape, arg, dpooled)
        _trunk_backward(params, grads, trunk_cache, dfeat)
        return grads


@dataclass(frozen=True)
class DecoderArch:
    latent_dim: int = 64
    hidden: tuple[int, ...] = (256, 512)
    n_points: int = 512

    def to_dict(self) -> dict:
        return {"latent_dim": self.latent_dim, "hidden": list(self.hidden),
                "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "DecoderArch":
        return cls(d["latent_dim"], tuple(d["hidden"]), d["n_points"])


class Decoder:
    """MLP from latent code to a fixed-size cloud (reshaped final layer)."""

    def __init__(self, arch: DecoderArch):
        self.arch = arch

    def init_params(self, seed: int) -> dict:
        rng = make_rng(seed, "decoder-init")
        params: dict = {}
        dims = (self.arch.latent_dim, *self.arch.hidden, 3 * self.arch.n_points)
        for i in range(len(dims) - 1):
            init_linear(params, rng, f"fc{i}", dims[i], dims[i + 1])
        return params

    def forward(self, params: dict, z: np.ndarray):
        if z.ndim != 2 or z.shape[1] != self.arch.latent_dim:
            raise ShapeMismatch(
                f"decoder expects (B, {self.arch.latent_dim}), got {z.shape}")
        n_layers = len(self.arch.hidden) + 1
        h = z
        pre = []
        inputs = []
        for i in range(n_layers):
            inputs.append(h)
            a = linear(params, f"fc{i}", h)
            if i < n_layers - 1:
                pre.append(a)
                h = leaky(a)
            else:
                h = a
        out = h.reshape(z.shape[0], self.arch.n_points, 3)
        return out, (pre, inputs)

    def backward(self, params: dict, cache, dout: np.ndarray):
        pre, inputs = cache
        grads: dict = {}
        n_layers = len(self.arch.hidden) + 1
        dh = dout.reshape(dout.shape[0], -1)
        for i in reversed(range(n_layers)):
            if i < n_layers - 1:
                dh = leaky_backward(pre[i], dh)
            dh = linear_backward(params, grads, f"fc{i}", inputs[i], dh)
        return grads, dh


@dataclass(frozen=True)
class SegmenterArch:
    point_dims: tuple[int, ...] = (3, 64, 128, 128)
    head_dims: tuple[int, ...] = (128, 64)
    n_classes: int = 4
    n_points: int = 512

    def to_dict(self) -> dict:
        return {"point_dims": list(self.point_dims), "head_dims": list(self.head_dims),
                "n_classes": self.n_classes, "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "SegmenterArch":
        return cls(tuple(d["point_dims"]), tuple(d["head_dims"]),
                   d["n_classes"], d["n_points"])


class Segmenter:
    """Per-point part classifier over [coords | point feature | pooled
    global feature]."""

    def __init__(self, arch: SegmenterArch):
        self.arch = arch

    def init_params(self, seed: int) -> dict:
        rng = make_rng(seed, "segmenter-init")
        params: dict = {}
        dims = self.arch.point_dims
        for i in range(len(dims) - 1):
            init_linear(params, rng, f"pt{i}", dims[i], dims[i + 1])
        feat = dims[-1]
        head_in = 3 + 2 * feat
        hdims = (head_in, *self.arch.head_dims, self.arch.n_classes)
        for i in range(len(hdims) - 1):
            init_linear(params, rng, f"head{i}", hdims[i], hdims[i + 1])
        return params

    def forward(self, params: dict, x: np.ndarray):
        if x.ndim != 3 or x.shape[2] != 3:
            raise ShapeMismatch(f"segmenter expects (B, N, 3), got {x.shape}")
        n_pts = x.shape[1]
        feat, trunk_cache = _trunk_forward(params, x, len(self.arch.point_dims) - 1)
        pooled, arg = max_pool_points(feat)
        tiled = np.broadcast_to(pooled[:, None, :], feat.shape)
        h = np.concatenate([x, feat, tiled], axis=2)
        n_head = len(self.arch.head_dims) + 1
        pre = []
        inputs = []
        for i in range(n_head):
            inputs.append(h)
            a = linear(params, f"head{i}", h)
            if i < n_head - 1:
                pre.append(a)
                h = leaky(a)
            else:
                h = a
        return h, (trunk_cache, feat.shape, arg, pre, inputs, n_pts)

    def backward(self, params: dict, cache, dlogits: np.ndarray) -> dict:
        trunk_cache, feat_shape, arg, pre, inputs, n_pts = cache
        grads: dict = {}
        n_head = len(self.arch.head_dims) + 1
        dh = dlogits
        for i in reversed(range(n_head)):
            if i < n_head - 1:
                dh = leaky_backward(pre[i], dh)
            dh = linear_backward(params, grads, f"head{i}", inputs[i], dh)
        feat_dim = feat_shape[2]
        dfeat = dh[:, :, 3:3 + feat_dim].copy()
        dpooled = dh[:, :, 3 + feat_dim:].sum(axis=1)
        dfeat += max_pool_backward(feat_shape, arg, dpooled)
        _trunk_backward(params, grads, trunk_cache, dfeat)
        return grads


@dataclass(frozen=True)
class ClassifierArch:
    point_dims: tuple[int, ...] = (3, 32, 64)
    n_points: int = 256

    def to_dict(self) -> dict:
        return {"point_dims": list(self.point_dims), "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierArch":
        return cls(tuple(d["point_dims"]), d["n_points"])


class BinaryClassifier:
    """Whole-cloud binary classifier: trunk features, max-pool, one logit."""

    def __init__(self, arch: ClassifierArch):
        self.arch = arch

    def init_params(self, seed: int) -> dict:
        rng = make_rng(seed, "classifier-init")
        params: dict = {}
        dims = self.arch.point_dims
        for i in range(len(dims) - 1):
            init_linear(params, rng, f"pt{i}", dims[i], dims[i + 1])
        init_linear(params, rng, "out", dims[-1], 1)
        return params

    def forward(self, params: dict, x: np.ndarray):
        if x.ndim != 3 or x.shape[2] != 3:
            raise ShapeMismatch(f"classifier expects (B, N, 3), got {x.shape}")
        feat, trunk_cache = _trunk_forward(params, x, len(self.arch.point_dims) - 1)
        pooled, arg = max_pool_points(feat)
        logit = linear(params, "out", pooled)[:, 0]
        return logit, (trunk_cache, feat.shape, arg, pooled)

    def backward(self, params: dict, cache, dlogit: np.ndarray) -> dict:
        trunk_cache, feat_shape, arg, pooled = cache
        grads: dict = {}
        dpooled = linear_backward(params, grads, "out", pooled, dlogit[:, None])
        dfeat = max_pool_backward(feat_shape, arg, dpooled)
        _trunk_backward(params, grads, trunk_cache, dfeat)
        return grads
