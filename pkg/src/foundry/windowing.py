"""Anchor-centered window extraction from episodes.

A sample spans [anchor - n_past, anchor + n_future]; rows outside the episode
are synthesized by a padding strategy, and candidates whose required padding
exceeds the configured thresholds are discarded. Image blobs are windowed by
reference (episode indices) with copy semantics regardless of strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAD_STRATEGIES = ("copy", "zero", "reflect")


@dataclass
class Episode:
    """Fixed-length multi-field trajectory; all fields share length T >= 1."""

    id: str
    fields: dict[str, np.ndarray] = field(default_factory=dict)
    blobs: dict[str, list[bytes]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lengths = {name: arr.shape[0] for name, arr in self.fields.items()}
        lengths.update({name: len(b) for name, b in self.blobs.items()})
        if not lengths:
            raise ValueError(f"episode {self.id!r} has no fields")
        distinct = set(lengths.values())
        if len(distinct) != 1:
            raise ValueError(f"episode {self.id!r} fields disagree on length: {lengths}")
        self.length = distinct.pop()
        if self.length < 1:
            raise ValueError(f"episode {self.id!r} must have at least one timestep")


@dataclass(frozen=True)
class WindowSpec:
    n_past: int = 0
    n_future: int = 0
    pad_strategy: str = "copy"
    max_padding_left: int = 0
    max_padding_right: int = 0
    stride: int = 1

    def __post_init__(self) -> None:
        if self.n_past < 0 or self.n_future < 0:
            raise ValueError("n_past and n_future must be >= 0")
        if self.max_padding_left < 0 or self.max_padding_right < 0:
            raise ValueError("padding thresholds must be >= 0")
        if self.pad_strategy not in PAD_STRATEGIES:
            raise ValueError(f"unknown pad strategy {self.pad_strategy!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def window_len(self) -> int:
        return self.n_past + 1 + self.n_future


@dataclass
class Sample:
    """One extracted window plus the metadata needed to interpret it."""

    episode_id: str
    anchor_t: int
    fields: dict[str, np.ndarray]
    blob_indices: dict[str, list[int]]
    anchor_relative_idx: int
    pad_left: int
    pad_right: int
    n_past: int
    n_future: int


def pad(seq: np.ndarray, left: int, right: int, strategy: str) -> np.ndarray:
    """Pad rows of a (T, ...) array at either end.

    copy repeats the boundary row; zero inserts zero rows; reflect mirrors
    about the boundary row excluding it ([a,b,c] left-padded by 2 gives
    [c,b,a,b,c]).
    """
    seq = np.asarray(seq)
    if seq.shape[0] < 1:
        raise ValueError("cannot pad an empty sequence")
    if left < 0 or right < 0:
        raise ValueError("pad amounts must be >= 0")
    if left == 0 and right == 0:
        return seq.copy()
    widths = [(left, right)] + [(0, 0)] * (seq.ndim - 1)
    if strategy == "copy":
        return np.pad(seq, widths, mode="edge")
    if strategy == "zero":
        return np.pad(seq, widths, mode="constant")
    if strategy == "reflect":
        if seq.shape[0] == 1:
            raise ValueError("reflect padding needs at least 2 rows as a mirror source")
        return np.pad(seq, widths, mode="reflect")
    raise ValueError(f"unknown pad strategy {strategy!r}")


def required_padding(length: int, anchor: int, spec: WindowSpec) -> tuple[int, int]:
    pad_left = max(0, spec.n_past - anchor)
    pad_right = max(0, anchor + spec.n_future - (length - 1))
    return pad_left, pad_right


def extract_window(ep: Episode, anchor: int, spec: WindowSpec) -> Sample | None:
    """Extract the window around ``anchor``; None when padding thresholds fail."""
    if not 0 <= anchor < ep.length:
        raise IndexError(f"anchor {anchor} out of range for episode of length {ep.length}")
    pad_left, pad_right = required_padding(ep.length, anchor, spec)
    if pad_left > spec.max_padding_left or pad_right > spec.max_padding_right:
        return None
    lo = max(0, anchor - spec.n_past)
    hi = min(ep.length, anchor + spec.n_future + 1)
    fields = {
        name: pad(arr[lo:hi], pad_left, pad_right, spec.pad_strategy)
        for name, arr in ep.fields.items()
    }
    # Blob windows are index lists clamped to the episode (copy semantics).
    idx = np.clip(np.arange(anchor - spec.n_past, anchor + spec.n_future + 1), 0, ep.length - 1)
    blob_indices = {name: idx.tolist() for name in ep.blobs}
    return Sample(
        episode_id=ep.id,
        anchor_t=anchor,
        fields=fields,
        blob_indices=blob_indices,
        anchor_relative_idx=spec.n_past,
        pad_left=pad_left,
        pad_right=pad_right,
        n_past=spec.n_past,
        n_future=spec.n_future,
    )


def enumerate_samples(ep: Episode, spec: WindowSpec) -> list[Sample]:
    """One candidate per anchor in ascending order, discards removed."""
    out = []
    for anchor in range(0, ep.length, spec.stride):
        sample = extract_window(ep, anchor, spec)
        if sample is not None:
            out.append(sample)
    return out


def proprio_slice(sample: Sample, proprio_fields: list[str]) -> np.ndarray:
    """Causal slice: rows [0 .. anchor] of each listed field, concatenated by column."""
    parts = []
    for name in proprio_fields:
        if name not in sample.fields:
            raise KeyError(f"unknown proprioception field {name!r}")
        parts.append(sample.fields[name][: sample.anchor_relative_idx + 1])
    return np.concatenate(parts, axis=1)


def crop_window(sample: Sample, n_past: int, n_future: int) -> Sample:
    """Select a smaller (n_past, n_future) sub-window from a preprocessed sample.

    Equivalent to extracting with the smaller spec directly, provided the
    original padding already satisfied the smaller spec's thresholds.
    """
    if n_past > sample.n_past or n_future > sample.n_future:
        raise ValueError(
            f"sub-window ({n_past}, {n_future}) exceeds stored window "
            f"({sample.n_past}, {sample.n_future})"
        )
    lo = sample.anchor_relative_idx - n_past
    hi = sample.anchor_relative_idx + n_future + 1
    return Sample(
        episode_id=sample.episode_id,
        anchor_t=sample.anchor_t,
        fields={name: arr[lo:hi] for name, arr in sample.fields.items()},
        blob_indices={name: idx[lo:hi] for name, idx in sample.blob_indices.items()},
        anchor_relative_idx=n_past,
        pad_left=max(0, sample.pad_left - (sample.n_past - n_past)),
        pad_right=max(0, sample.pad_right - (sample.n_future - n_future)),
        n_past=n_past,
        n_future=n_future,
    )
