"""Deterministic seed derivation.

Every stochastic operation takes an explicit seed; nested components derive
child seeds from (root seed, string path) so that reordering or skipping
stages never shifts another stage's random stream.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, *path: object) -> int:
    """Map (root, path...) to a stable 63-bit seed."""
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "big") >> 1


def make_rng(root: int, *path: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *path))
