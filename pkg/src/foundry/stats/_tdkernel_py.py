"""Pure-Python centroid compression kernel.

Fallback for the compiled extension in ``_tdkernel.pyx``; both implement the
identical operation with the identical floating-point evaluation order, so
they produce bit-equal centroids.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _k(q: float, delta: float) -> float:
    # Scale function mapping quantile position to cluster index space.
    return 0.5 * delta * (math.asin(2.0 * q - 1.0) / math.pi + 0.5)


def _q_limit(q0: float, delta: float) -> float:
    k = _k(q0, delta) + 1.0
    if k >= 0.5 * delta:
        return 1.0
    return 0.5 * (math.sin(math.pi * (2.0 * k / delta - 0.5)) + 1.0)


def compress(means, weights, delta: float):
    """Merge adjacent centroids of a mean-sorted list under the scale function.

    Returns (means, weights) arrays of the surviving centroids, still sorted.
    """
    n = len(means)
    if n == 0:
        return np.empty(0), np.empty(0)

    total = 0.0
    for i in range(n):
        total += weights[i]

    out_m = np.empty(n)
    out_w = np.empty(n)
    m = 0

    cur_mean = float(means[0])
    cur_w = float(weights[0])
    closed_w = 0.0
    q_limit = _q_limit(0.0, delta)

    for i in range(1, n):
        w = float(weights[i])
        proposed_q = (closed_w + cur_w + w) / total
        if proposed_q <= q_limit:
            cur_mean = (cur_mean * cur_w + float(means[i]) * w) / (cur_w + w)
            cur_w += w
        else:
            out_m[m] = cur_mean
            out_w[m] = cur_w
            m += 1
            closed_w += cur_w
            q_limit = _q_limit(closed_w / total, delta)
            cur_mean = float(means[i])
            cur_w = w

    out_m[m] = cur_mean
    out_w[m] = cur_w
    m += 1
    return out_m[:m].copy(), out_w[:m].copy()
