"""Building blocks for the small point-cloud networks: shared linear layers,
leaky rectifier, max-pool over points, parameter init, and Adam.

Everything runs in float64. Parameters live in flat dicts keyed by
"<layer>.W" / "<layer>.b" so checkpoints, gradients, and the finite
difference checker can treat them uniformly.
"""
from __future__ import annotations

import numpy as np

LEAKY_SLOPE = 0.01


def he_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def init_linear(params: dict, rng: np.random.Generator, name: str,
                n_in: int, n_out: int) -> None:
    params[f"{name}.W"] = he_uniform(rng, n_in, (n_in, n_out))
    params[f"{name}.b"] = np.zeros(n_out)


def linear(params: dict, name: str, x: np.ndarray) -> np.ndarray:
    return x @ params[f"{name}.W"] + params[f"{name}.b"]


def linear_backward(params: dict, grads: dict, name: str, x: np.ndarray,
                    dout: np.ndarray) -> np.ndarray:
    """Accumulate dW/db into ``grads`` and return dx. ``x``/``dout`` may have
    any leading shape; the last axis is the feature axis."""
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    grads[f"{name}.W"] = grads.get(f"{name}.W", 0.0) + x2.T @ d2
    grads[f"{name}.b"] = grads.get(f"{name}.b", 0.0) + d2.sum(axis=0)
    return dout @ params[f"{name}.W"].T


def leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def leaky_backward(x: np.ndarray, dout: np.ndarray) -> np.ndarray:
    return np.where(x > 0, dout, LEAKY_SLOPE * dout)


def max_pool_points(feat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise max over the point axis of a (B, N, F) tensor.
    Returns (pooled (B, F), argmax (B, F)). Max is exactly permutation
    invariant; argmax keeps the first occurrence for a deterministic
    backward pass."""
    arg = feat.argmax(axis=1)
    pooled = np.take_along_axis(feat, arg[:, None, :], axis=1)[:, 0, :]
    return pooled, arg


def max_pool_backward(shape, arg: np.ndarray, dpooled: np.ndarray) -> np.ndarray:
    dfeat = np.zeros(shape)
    b_idx = np.arange(shape[0])[:, None]
    f_idx = np.arange(shape[2])[None, :]
    dfeat[b_idx, arg, f_idx] = dpooled
    return dfeat


class Adam:
    """Standard Adam with optional L2 weight decay applied to weight
    matrices (keys ending in ".W") only."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for key, p in params.items():
            g = grads[key]
            if self.weight_decay > 0.0 and key.endswith(".W"):
                g = g + self.weight_decay * p
            m = self.m[key]
            v = self.v[key]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def flatten_params(params: dict) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in sorted(params)])


def param_count(params: dict) -> int:
    return sum(v.size for v in params.values())
