"""Streaming count/mean/variance/extrema accumulation with exact parallel merge."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DataQualityError(ValueError):
    """Non-finite value encountered in input data."""


@dataclass(frozen=True)
class Moments:
    """Finalized statistics; variance is population (divide-by-n)."""

    count: int
    mean: np.ndarray
    var: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray


class MomentAccumulator:
    """One-pass mean/m2/min/max over observations of a fixed shape.

    ``shape`` is the per-observation shape: () for scalars, (D,) per
    dimension, (T, D) per timestep and dimension. Single-writer; combine
    across writers with :meth:`combine`.
    """

    __slots__ = ("shape", "name", "count", "mean", "m2", "min", "max")

    def __init__(self, shape: tuple[int, ...] = (), name: str = ""):
        self.shape = tuple(shape)
        self.name = name
        self.count = 0
        self.mean = np.zeros(self.shape)
        self.m2 = np.zeros(self.shape)
        self.min = np.full(self.shape, np.inf)
        self.max = np.full(self.shape, -np.inf)

    def _check_finite(self, x: np.ndarray) -> None:
        if not np.all(np.isfinite(x)):
            label = f" in field '{self.name}'" if self.name else ""
            raise DataQualityError(f"non-finite value{label}")

    def accumulate(self, x) -> None:
        """Fold in a single observation (numerically stable incremental update)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.shape:
            raise ValueError(f"observation shape {x.shape} != accumulator shape {self.shape}")
        self._check_finite(x)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)
        self.min = np.minimum(self.min, x)
        self.max = np.maximum(self.max, x)

    def accumulate_batch(self, xs) -> None:
        """Fold in observations stacked along axis 0 via one exact chunk merge."""
        xs = np.asarray(xs, dtype=np.float64)
        if xs.shape[1:] != self.shape:
            raise ValueError(f"batch shape {xs.shape} != (n, *{self.shape})")
        if xs.shape[0] == 0:
            return
        self._check_finite(xs)
        chunk = MomentAccumulator(self.shape, self.name)
        chunk.count = int(xs.shape[0])
        chunk.mean = xs.mean(axis=0)
        chunk.m2 = ((xs - chunk.mean) ** 2).sum(axis=0)
        chunk.min = xs.min(axis=0)
        chunk.max = xs.max(axis=0)
        merged = self.combine(chunk)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        self.min, self.max = merged.min, merged.max

    def combine(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Exact merge of two independent accumulations of the same shape."""
        if other.shape != self.shape:
            raise ValueError(f"cannot combine shapes {self.shape} and {other.shape}")
        out = MomentAccumulator(self.shape, self.name or other.name)
        out.count = self.count + other.count
        if out.count == 0:
            return out
        delta = other.mean - self.mean
        out.mean = (self.mean * self.count + other.mean * other.count) / out.count
        out.m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / out.count)
        out.min = np.minimum(self.min, other.min)
        out.max = np.maximum(self.max, other.max)
        return out

    def finalize(self) -> Moments:
        if self.count < 1:
            raise ValueError("cannot finalize an empty accumulator")
        var = self.m2 / self.count
        return Moments(
            count=self.count,
            mean=self.mean.copy(),
            var=var,
            std=np.sqrt(var),
            min=self.min.copy(),
            max=self.max.copy(),
        )
