"""Per-field dataset statistics: accumulation, merging, and the stats.json format.

A field's statistics live either at global scope (one entry per dimension,
pooled over all timesteps) or per-timestep scope (one entry per relative
timestep and dimension, over windows of a fixed shape). Moments merge
exactly; percentiles merge through the t-digest sketches.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass, field

import numpy as np

from foundry.stats.moments import MomentAccumulator
from foundry.stats.tdigest import TDigest, merge_digests

STATS_VERSION = 1
DEFAULT_DELTA = 100.0

PERCENTILES = (("p1", 0.01), ("p5", 0.05), ("p95", 0.95), ("p99", 0.99))


class StatsFormatError(ValueError):
    """stats.json schema violation, located by a JSON pointer."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


@dataclass
class FieldStats:
    """Finalized statistics for one numeric field.

    Arrays have shape (dims,) at global scope and (window, dims) at
    per-timestep scope; ``digests`` mirrors that nesting.
    """

    dims: int
    per_timestep: bool
    count: int
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    p1: np.ndarray
    p5: np.ndarray
    p95: np.ndarray
    p99: np.ndarray
    digests: list

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldStats):
            return NotImplemented
        arrays = ("mean", "std", "min", "max", "p1", "p5", "p95", "p99")
        return (
            self.dims == other.dims
            and self.per_timestep == other.per_timestep
            and self.count == other.count
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
            and self.digests == other.digests
        )


@dataclass
class DatasetStats:
    fields: dict[str, FieldStats] = field(default_factory=dict)
    sample_count: int = 0
    scope: str = "global"  # "global" | "per_timestep"
    window_shape: tuple[int, int] | None = None  # (n_past, n_future) when per_timestep

    def __post_init__(self) -> None:
        if self.scope not in ("global", "per_timestep"):
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.scope == "per_timestep" and self.window_shape is None:
            raise ValueError("per_timestep scope requires a window shape")

    def window_len(self) -> int:
        assert self.window_shape is not None
        return self.window_shape[0] + 1 + self.window_shape[1]


class FieldAccumulator:
    """Builds a :class:`FieldStats` from a stream of sample windows."""

    def __init__(self, name: str, dims: int, per_timestep: bool, window_len: int | None = None,
                 delta: float = DEFAULT_DELTA):
        if per_timestep and window_len is None:
            raise ValueError("per_timestep accumulation requires the window length")
        self.name = name
        self.dims = dims
        self.per_timestep = per_timestep
        self.window_len = window_len
        if per_timestep:
            self.moments = MomentAccumulator((window_len, dims), name)
            self.digests = [[TDigest(delta) for _ in range(dims)] for _ in range(window_len)]
        else:
            self.moments = MomentAccumulator((dims,), name)
            self.digests = [TDigest(delta) for _ in range(dims)]

    def add_windows(self, windows: np.ndarray) -> None:
        """Fold in windows stacked as (n, window_len, dims)."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[2] != self.dims:
            raise ValueError(f"expected (n, T, {self.dims}) windows, got {windows.shape}")
        if self.per_timestep:
            if windows.shape[1] != self.window_len:
                raise ValueError(
                    f"window length {windows.shape[1]} != configured {self.window_len}"
                )
            self.moments.accumulate_batch(windows)
            for t in range(windows.shape[1]):
                for d in range(self.dims):
                    self.digests[t][d].extend(windows[:, t, d])
        else:
            rows = windows.reshape(-1, self.dims)
            self.moments.accumulate_batch(rows)
            for d in range(self.dims):
                self.digests[d].extend(rows[:, d])

    def add_rows(self, rows: np.ndarray) -> None:
        """Fold in unwindowed observations (n, dims); global scope only."""
        if self.per_timestep:
            raise ValueError("add_rows is only valid at global scope")
        rows = np.asarray(rows, dtype=np.float64)
        self.moments.accumulate_batch(rows)
        for d in range(self.dims):
            self.digests[d].extend(rows[:, d])

    def combine(self, other: "FieldAccumulator") -> "FieldAccumulator":
        if (self.dims, self.per_timestep, self.window_len) != (
            other.dims,
            other.per_timestep,
            other.window_len,
        ):
            raise ValueError(f"incompatible accumulators for field '{self.name}'")
        out = FieldAccumulator(self.name, self.dims, self.per_timestep, self.window_len)
        out.moments = self.moments.combine(other.moments)
        if self.per_timestep:
            out.digests = [
                [merge_digests(a, b) for a, b in zip(ra, rb)]
                for ra, rb in zip(self.digests, other.digests)
            ]
        else:
            out.digests = [merge_digests(a, b) for a, b in zip(self.digests, other.digests)]
        return out

    def finalize(self) -> FieldStats:
        m = self.moments.finalize()
        quant = {name: np.zeros(self.moments.shape) for name, _ in PERCENTILES}
        if self.per_timestep:
            for t, row in enumerate(self.digests):
                for d, dig in enumerate(row):
                    for name, q in PERCENTILES:
                        quant[name][t, d] = dig.quantile(q)
        else:
            for d, dig in enumerate(self.digests):
                for name, q in PERCENTILES:
                    quant[name][d] = dig.quantile(q)
        return FieldStats(
            dims=self.dims,
            per_timestep=self.per_timestep,
            count=m.count,
            mean=m.mean,
            std=m.std,
            min=m.min,
            max=m.max,
            digests=self.digests,
            **quant,
        )


def _merged_field(a: FieldStats, b: FieldStats, variance_merge: str) -> FieldStats:
    n = a.count + b.count
    wa, wb = a.count / n, b.count / n
    mean = wa * a.mean + wb * b.mean
    within = wa * a.std**2 + wb * b.std**2
    if variance_merge == "total":
        var = within + wa * (a.mean - mean) ** 2 + wb * (b.mean - mean) ** 2
    elif variance_merge == "within_only":
        var = within
    else:
        raise ValueError(f"unknown variance_merge mode {variance_merge!r}")
    if a.per_timestep:
        digests = [
            [merge_digests(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.digests, b.digests)
        ]
        quant = {
            name: np.array([[d.quantile(q) for d in row] for row in digests])
            for name, q in PERCENTILES
        }
    else:
        digests = [merge_digests(x, y) for x, y in zip(a.digests, b.digests)]
        quant = {name: np.array([d.quantile(q) for d in digests]) for name, q in PERCENTILES}
    return FieldStats(
        dims=a.dims,
        per_timestep=a.per_timestep,
        count=n,
        mean=mean,
        std=np.sqrt(var),
        min=np.minimum(a.min, b.min),
        max=np.maximum(a.max, b.max),
        digests=digests,
        **quant,
    )


def merge_stats(a: DatasetStats, b: DatasetStats, variance_merge: str = "total") -> DatasetStats:
    """Merge two dataset statistics over disjoint data.

    Means are count-weighted; variances pool by the law of total variance
    (``variance_merge="within_only"`` drops the between-dataset term);
    extrema are element-wise; percentiles come from merged sketches.
    """
    if a.sample_count == 0 and not a.fields:
        return b
    if b.sample_count == 0 and not b.fields:
        return a
    if a.scope != b.scope or a.window_shape != b.window_shape:
        raise ValueError("cannot merge stats with different scopes or window shapes")
    if set(a.fields) != set(b.fields):
        raise ValueError(
            f"field sets differ: {sorted(a.fields)} vs {sorted(b.fields)}"
        )
    merged: dict[str, FieldStats] = {}
    for name in a.fields:
        fa, fb = a.fields[name], b.fields[name]
        if fa.dims != fb.dims or fa.per_timestep != fb.per_timestep:
            raise ValueError(f"field '{name}' has mismatched dimensions or scope")
        merged[name] = _merged_field(fa, fb, variance_merge)
    return DatasetStats(
        fields=merged,
        sample_count=a.sample_count + b.sample_count,
        scope=a.scope,
        window_shape=a.window_shape,
    )


def _field_to_json(f: FieldStats) -> dict:
    def arr(a: np.ndarray) -> list:
        return a.tolist()

    if f.per_timestep:
        tdigest = [[base64.b64encode(d.to_bytes()).decode("ascii") for d in row] for row in f.digests]
    else:
        tdigest = [base64.b64encode(d.to_bytes()).decode("ascii") for d in f.digests]
    return {
        "dims": f.dims,
        "per_timestep": f.per_timestep,
        "count": f.count,
        "mean": arr(f.mean),
        "std": arr(f.std),
        "min": arr(f.min),
        "max": arr(f.max),
        "p1": arr(f.p1),
        "p5": arr(f.p5),
        "p95": arr(f.p95),
        "p99": arr(f.p99),
        "tdigest": tdigest,
    }


def serialize_stats(s: DatasetStats) -> bytes:
    doc: dict = {
        "version": STATS_VERSION,
        "sample_count": s.sample_count,
        "scope": s.scope,
        "fields": {name: _field_to_json(f) for name, f in sorted(s.fields.items())},
    }
    if s.scope == "per_timestep":
        doc["window"] = {"n_past": s.window_shape[0], "n_future": s.window_shape[1]}
    return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")


def _expect(cond: bool, pointer: str, message: str) -> None:
    if not cond:
        raise StatsFormatError(pointer, message)


def _parse_array(node, pointer: str, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(node, dtype=np.float64) if node is not None else None
    if arr is None or arr.shape != shape:
        raise StatsFormatError(pointer, f"expected numeric array of shape {shape}")
    return arr


def _parse_field(name: str, node, window_len: int | None) -> FieldStats:
    ptr = f"/fields/{name}"
    _expect(isinstance(node, dict), ptr, "expected an object")
    for key in ("dims", "per_timestep", "count", "mean", "std", "min", "max",
                "p1", "p5", "p95", "p99", "tdigest"):
        _expect(key in node, f"{ptr}/{key}", "missing key")
    dims = node["dims"]
    _expect(isinstance(dims, int) and dims >= 1, f"{ptr}/dims", "expected a positive integer")
    per_timestep = node["per_timestep"]
    _expect(isinstance(per_timestep, bool), f"{ptr}/per_timestep", "expected a boolean")
    if per_timestep:
        _expect(window_len is not None, ptr, "per_timestep field in a dataset without a window")
        shape: tuple[int, ...] = (window_len, dims)
    else:
        shape = (dims,)
    count = node["count"]
    _expect(isinstance(count, int) and count >= 1, f"{ptr}/count", "expected a positive integer")

    arrays = {
        key: _parse_array(node[key], f"{ptr}/{key}", shape)
        for key in ("mean", "std", "min", "max", "p1", "p5", "p95", "p99")
    }

    def parse_digest(b64, pointer: str) -> TDigest:
        _expect(isinstance(b64, str), pointer, "expected a base64 string")
        try:
            return TDigest.from_bytes(base64.b64decode(b64, validate=True))
        except (ValueError, binascii.Error) as exc:
            raise StatsFormatError(pointer, f"corrupted digest payload ({exc})") from exc

    raw = node["tdigest"]
    if per_timestep:
        _expect(
            isinstance(raw, list) and len(raw) == window_len
            and all(isinstance(r, list) and len(r) == dims for r in raw),
            f"{ptr}/tdigest",
            f"expected a {window_len}x{dims} nested list",
        )
        digests: list = [
            [parse_digest(b, f"{ptr}/tdigest/{t}/{d}") for d, b in enumerate(row)]
            for t, row in enumerate(raw)
        ]
    else:
        _expect(isinstance(raw, list) and len(raw) == dims, f"{ptr}/tdigest",
                f"expected a list of length {dims}")
        digests = [parse_digest(b, f"{ptr}/tdigest/{d}") for d, b in enumerate(raw)]

    return FieldStats(dims=dims, per_timestep=per_timestep, count=count, digests=digests, **arrays)


def parse_stats(data: bytes) -> DatasetStats:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise StatsFormatError("", f"invalid JSON ({exc})") from exc
    _expect(isinstance(doc, dict), "", "expected a JSON object")
    _expect(doc.get("version") == STATS_VERSION, "/version", f"expected {STATS_VERSION}")
    sample_count = doc.get("sample_count")
    _expect(isinstance(sample_count, int) and sample_count >= 0, "/sample_count",
            "expected a non-negative integer")
    scope = doc.get("scope")
    _expect(scope in ("global", "per_timestep"), "/scope", "expected 'global' or 'per_timestep'")

    window_shape = None
    window_len = None
    if scope == "per_timestep":
        window = doc.get("window")
        _expect(
            isinstance(window, dict)
            and isinstance(window.get("n_past"), int)
            and isinstance(window.get("n_future"), int)
            and window["n_past"] >= 0
            and window["n_future"] >= 0,
            "/window",
            "expected {n_past: int>=0, n_future: int>=0}",
        )
        window_shape = (window["n_past"], window["n_future"])
        window_len = window_shape[0] + 1 + window_shape[1]

    fields_node = doc.get("fields")
    _expect(isinstance(fields_node, dict), "/fields", "expected an object")
    fields = {
        name: _parse_field(name, node, window_len) for name, node in fields_node.items()
    }
    if scope == "global":
        for name, f in fields.items():
            _expect(not f.per_timestep, f"/fields/{name}/per_timestep",
                    "per_timestep field in a global-scope dataset")
    return DatasetStats(fields=fields, sample_count=sample_count, scope=scope,
                        window_shape=window_shape)
