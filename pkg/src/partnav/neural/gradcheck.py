"""Central-difference verification of analytic parameter gradients."""
from __future__ import annotations

import numpy as np


def finite_diff_check(loss_and_grads, params: dict, h: float = 1e-5,
                      max_entries_per_param: int | None = None,
                      seed: int = 0) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_and_grads(params) -> (scalar loss, grads dict)``. Perturbs every
    parameter entry (or a seeded sample of ``max_entries_per_param`` per
    tensor) and returns the maximum relative error, with the relative
    denominator floored at 1e-3 to keep near-zero entries meaningful.
    """
    _, analytic = loss_and_grads(params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for key in sorted(params):
        p = params[key]
        flat = p.reshape(-1)
        n = flat.size
        if max_entries_per_param is not None and n > max_entries_per_param:
            idxs = rng.choice(n, size=max_entries_per_param, replace=False)
        else:
            idxs = np.arange(n)
        a_flat = np.asarray(analytic[key]).reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = loss_and_grads(params)
            flat[i] = orig - h
            lm, _ = loss_and_grads(params)
            flat[i] = orig
            fd = (lp - lm) / (2.0 * h)
            a = a_flat[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-3)
            if rel > worst:
                worst = rel
    return worst
