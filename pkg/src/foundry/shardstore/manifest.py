"""Newline-delimited JSON shard manifest (manifest.jsonl)."""

from __future__ import annotations

import json
from dataclasses import dataclass


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    shard: str  # 8-digit zero-padded id
    num_sequences: int

    def __post_init__(self) -> None:
        if len(self.shard) != 8 or not self.shard.isdigit():
            raise ManifestError(f"shard id must be 8 digits, got {self.shard!r}")
        if self.num_sequences < 1:
            raise ManifestError("num_sequences must be >= 1")


def _check_order(entries: list[ManifestEntry]) -> None:
    ids = [int(e.shard) for e in entries]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise ManifestError("shard ids must be strictly increasing")


def write_manifest(entries: list[ManifestEntry]) -> bytes:
    _check_order(entries)
    lines = [
        json.dumps({"shard": e.shard, "num_sequences": e.num_sequences}) for e in entries
    ]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def read_manifest(data: bytes) -> list[ManifestEntry]:
    entries: list[ManifestEntry] = []
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict) or set(obj) != {"shard", "num_sequences"}:
            raise ManifestError(f"line {lineno}: expected exactly shard and num_sequences keys")
        if not isinstance(obj["shard"], str) or not isinstance(obj["num_sequences"], int):
            raise ManifestError(f"line {lineno}: wrong value types")
        try:
            entries.append(ManifestEntry(obj["shard"], obj["num_sequences"]))
        except ManifestError as exc:
            raise ManifestError(f"line {lineno}: {exc}") from exc
    _check_order(entries)
    return entries


def total_sequences(entries: list[ManifestEntry]) -> int:
    return sum(e.num_sequences for e in entries)
