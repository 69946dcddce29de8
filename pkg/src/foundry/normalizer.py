"""Normalization of action/proprioception tensors with exact denormalization.

Four methods (stddev, minmax, percentile_1_99, percentile_5_95) over two
scopes (global, per_timestep). The interval-based methods map their interval
onto [-1, 1] with no clipping: out-of-range values stay out of range, which
keeps the transform invertible. Near-zero scales clamp to 1 so constant
dimensions pass through centered.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from foundry.stats.dataset import FieldStats

METHODS = ("stddev", "minmax", "percentile_1_99", "percentile_5_95")
SCOPES = ("global", "per_timestep")

CONFIG_METHOD_KEY = "data.normalization.method"
CONFIG_SCOPE_KEY = "data.normalization.scope"


@dataclass(frozen=True)
class NormSpec:
    method: str = "stddev"
    scope: str = "global"
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown normalization method {self.method!r}")
        if self.scope not in SCOPES:
            raise ValueError(f"unknown normalization scope {self.scope!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class NormParams:
    """Per-dimension (or per-timestep-and-dimension) offset and scale.

    ``clamped`` lists the indices whose scale fell below epsilon and was
    replaced by 1 (a warning record, not an error: locked joints are common).
    """

    offset: np.ndarray
    scale: np.ndarray
    clamped: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.offset.shape != self.scale.shape:
            raise ValueError("offset and scale must share a shape")

    @property
    def per_timestep(self) -> bool:
        return self.offset.ndim == 2


def spec_from_config(cfg) -> NormSpec:
    """Build a NormSpec from the standard configuration keys."""
    return NormSpec(method=cfg[CONFIG_METHOD_KEY], scope=cfg[CONFIG_SCOPE_KEY])


def build(stats: FieldStats, spec: NormSpec) -> NormParams:
    """Derive offset/scale from finalized field statistics."""
    if stats.per_timestep != (spec.scope == "per_timestep"):
        raise ValueError(
            f"stats scope ({'per_timestep' if stats.per_timestep else 'global'}) "
            f"does not match requested scope {spec.scope!r}"
        )
    if spec.method == "stddev":
        offset, scale = stats.mean, stats.std
    elif spec.method == "minmax":
        offset = (stats.min + stats.max) / 2.0
        scale = (stats.max - stats.min) / 2.0
    elif spec.method == "percentile_1_99":
        offset = (stats.p1 + stats.p99) / 2.0
        scale = (stats.p99 - stats.p1) / 2.0
    else:  # percentile_5_95
        offset = (stats.p5 + stats.p95) / 2.0
        scale = (stats.p95 - stats.p5) / 2.0
    offset = np.array(offset, dtype=np.float64)
    scale = np.array(scale, dtype=np.float64)
    small = scale < spec.epsilon
    clamped = tuple(map(tuple, np.argwhere(small))) if small.any() else ()
    if small.any():
        scale = np.where(small, 1.0, scale)
    return NormParams(offset=offset, scale=scale, clamped=clamped)


def _check_shape(x: np.ndarray, p: NormParams) -> None:
    need = p.offset.shape
    if x.shape[-len(need):] != need:
        raise ValueError(f"input trailing shape {x.shape} does not match params {need}")


def normalize(x: np.ndarray, p: NormParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _check_shape(x, p)
    return (x - p.offset) / p.scale


def denormalize(y: np.ndarray, p: NormParams) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    _check_shape(y, p)
    return y * p.scale + p.offset


def align_per_timestep(p: NormParams, anchor_relative_idx: int,
                       sub_window: tuple[int, int]) -> NormParams:
    """Select the parameter rows covering [anchor - n_past', anchor + n_future']."""
    if not p.per_timestep:
        raise ValueError("alignment applies to per-timestep parameters only")
    n_past, n_future = sub_window
    lo = anchor_relative_idx - n_past
    hi = anchor_relative_idx + n_future + 1
    if lo < 0 or hi > p.offset.shape[0]:
        raise ValueError(
            f"sub-window ({n_past}, {n_future}) around index {anchor_relative_idx} "
            f"exceeds the stored window of {p.offset.shape[0]} timesteps"
        )
    clamped = tuple(idx for idx in p.clamped if lo <= idx[0] < hi)
    return NormParams(offset=p.offset[lo:hi], scale=p.scale[lo:hi], clamped=clamped)
