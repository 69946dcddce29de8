"""Streaming, mergeable statistics: moments, quantile sketches, dataset stats."""

from foundry.stats.dataset import (
    DatasetStats,
    FieldAccumulator,
    FieldStats,
    StatsFormatError,
    merge_stats,
    parse_stats,
    serialize_stats,
)
from foundry.stats.moments import DataQualityError, MomentAccumulator, Moments
from foundry.stats.tdigest import KERNEL_BACKEND, TDigest, merge_digests

__all__ = [
    "DataQualityError",
    "DatasetStats",
    "FieldAccumulator",
    "FieldStats",
    "KERNEL_BACKEND",
    "MomentAccumulator",
    "Moments",
    "StatsFormatError",
    "TDigest",
    "merge_digests",
    "merge_stats",
    "parse_stats",
    "serialize_stats",
]
