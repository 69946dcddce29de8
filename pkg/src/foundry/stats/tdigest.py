"""Mergeable streaming quantile sketch built from weighted centroids.

Values are buffered and periodically folded into a sorted centroid list by a
compression kernel; two sketches with equal compression merge by
concatenating centroids and recompressing. The kernel is the hot inner loop
of preprocessing, so a compiled extension is used when available and a
pure-Python twin otherwise (``FOUNDRY_PURE_PYTHON=1`` forces the fallback).
"""

from __future__ import annotations

import math
import os
import struct

import numpy as np

if os.environ.get("FOUNDRY_PURE_PYTHON"):
    from foundry.stats import _tdkernel_py as _kernel
else:
    try:
        from foundry.stats import _tdkernel as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from foundry.stats import _tdkernel_py as _kernel

KERNEL_BACKEND: str = _kernel.BACKEND

_MAGIC = b"TDG1"


class TDigest:
    """T-digest with a fixed compression ``delta`` and buffer size ``5 * delta``."""

    __slots__ = ("delta", "_means", "_weights", "_total", "_min", "_max", "_buffer")

    def __init__(self, delta: float = 100.0):
        if delta <= 0:
            raise ValueError("compression delta must be positive")
        self.delta = float(delta)
        self._means = np.empty(0)
        self._weights = np.empty(0)
        self._total = 0.0
        self._min = math.inf
        self._max = -math.inf
        self._buffer: list[tuple[float, float]] = []

    @property
    def total_weight(self) -> float:
        return self._total

    @property
    def min(self) -> float:
        return self._min

    @property
    def max(self) -> float:
        return self._max

    def centroids(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (means, weights) after flushing the insert buffer."""
        self.compress()
        return self._means.copy(), self._weights.copy()

    def insert(self, x: float, w: float = 1.0) -> None:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} inserted into digest")
        if w <= 0:
            raise ValueError("weight must be positive")
        self._buffer.append((x, float(w)))
        self._total += w
        if x < self._min:
            self._min = x
        if x > self._max:
            self._max = x
        if len(self._buffer) >= int(5 * self.delta):
            self.compress()

    def extend(self, values, weights=None) -> None:
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite value inserted into digest")
        if weights is None:
            weights = np.ones_like(values)
        else:
            weights = np.asarray(weights, dtype=np.float64).reshape(-1)
            if weights.shape != values.shape or np.any(weights <= 0):
                raise ValueError("weights must match values and be positive")
        if values.size == 0:
            return
        self._total += float(weights.sum())
        self._min = min(self._min, float(values.min()))
        self._max = max(self._max, float(values.max()))
        self._buffer.extend(zip(values.tolist(), weights.tolist()))
        if len(self._buffer) >= int(5 * self.delta):
            self.compress()

    def compress(self) -> None:
        """Fold buffered values into the centroid list."""
        if not self._buffer:
            return
        buf = np.array(self._buffer, dtype=np.float64)
        self._buffer.clear()
        means = np.concatenate([self._means, buf[:, 0]])
        weights = np.concatenate([self._weights, buf[:, 1]])
        order = np.argsort(means, kind="stable")
        self._means, self._weights = _kernel.compress(
            np.ascontiguousarray(means[order]), np.ascontiguousarray(weights[order]), self.delta
        )

    def quantile(self, q: float) -> float:
        """Approximate value at quantile ``q`` via centroid interpolation."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantile must be in [0, 1], got {q!r}")
        if self._total <= 0:
            raise ValueError("quantile of an empty digest")
        self.compress()
        means, weights = self._means, self._weights
        if len(means) == 1:
            if q <= 0:
                return self._min
            if q >= 1:
                return self._max
            return float(means[0])
        target = q * self._total
        # Centroid i sits at cumulative position (weight before it) + w_i / 2.
        cum = np.cumsum(weights)
        positions = cum - weights / 2.0
        if target <= positions[0]:
            frac = target / positions[0] if positions[0] > 0 else 1.0
            return self._min + frac * (float(means[0]) - self._min)
        if target >= positions[-1]:
            span = self._total - positions[-1]
            frac = (target - positions[-1]) / span if span > 0 else 1.0
            return float(means[-1]) + frac * (self._max - float(means[-1]))
        return float(np.interp(target, positions, means))

    def to_bytes(self) -> bytes:
        """Deterministic binary form: header + centroid mean/weight arrays."""
        self.compress()
        n = len(self._means)
        head = struct.pack("<4sdddId", _MAGIC, self.delta, self._min, self._max, n, self._total)
        return head + self._means.astype("<f8").tobytes() + self._weights.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "TDigest":
        head_size = struct.calcsize("<4sdddId")
        if len(data) < head_size:
            raise ValueError("truncated digest payload")
        magic, delta, lo, hi, n, total = struct.unpack("<4sdddId", data[:head_size])
        if magic != _MAGIC:
            raise ValueError("bad digest magic")
        body = data[head_size:]
        if len(body) != 16 * n:
            raise ValueError("digest payload length mismatch")
        d = cls(delta)
        d._means = np.frombuffer(body[: 8 * n], dtype="<f8").astype(np.float64)
        d._weights = np.frombuffer(body[8 * n :], dtype="<f8").astype(np.float64)
        d._min, d._max, d._total = lo, hi, total
        return d

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TDigest):
            return NotImplemented
        self.compress()
        other.compress()
        return (
            self.delta == other.delta
            and self._total == other._total
            and self._min == other._min
            and self._max == other._max
            and np.array_equal(self._means, other._means)
            and np.array_equal(self._weights, other._weights)
        )


def merge_digests(a: TDigest, b: TDigest) -> TDigest:
    """Combine two sketches of equal compression into one over the pooled data."""
    if a.delta != b.delta:
        raise ValueError(f"cannot merge digests with different compression ({a.delta} vs {b.delta})")
    am, aw = a.centroids()
    bm, bw = b.centroids()
    out = TDigest(a.delta)
    means = np.concatenate([am, bm])
    weights = np.concatenate([aw, bw])
    if means.size:
        order = np.argsort(means, kind="stable")
        out._means, out._weights = _kernel.compress(
            np.ascontiguousarray(means[order]), np.ascontiguousarray(weights[order]), out.delta
        )
    out._total = a.total_weight + b.total_weight
    out._min = min(a.min, b.min)
    out._max = max(a.max, b.max)
    return out
