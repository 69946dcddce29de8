"""Sample records and deterministic tar shard reading/writing.

A sample is a group of files sharing a unique key prefix; within a shard the
entries of one sample are contiguous and named ``{key}_{field}.{ext}``.
Field names must not contain underscores so the key can be recovered as the
entry name minus its final underscore-delimited segment.
"""

from __future__ import annotations

import io
import tarfile
from dataclasses import dataclass, field


class ShardFormatError(ValueError):
    pass


@dataclass
class SampleRecord:
    """Ordered field-name -> (extension, payload bytes) map under one key."""

    key: str
    files: dict[str, tuple[str, bytes]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.key:
            raise ShardFormatError("sample key must be nonempty")
        for name, (ext, _) in self.files.items():
            _check_field_name(name, ext)

    def add(self, name: str, ext: str, data: bytes) -> None:
        _check_field_name(name, ext)
        if name in self.files:
            raise ShardFormatError(f"duplicate field {name!r} in sample {self.key!r}")
        self.files[name] = (ext, data)


def _check_field_name(name: str, ext: str) -> None:
    if not name or "_" in name:
        raise ShardFormatError(
            f"field name {name!r} is invalid: names must be nonempty and contain no underscore"
        )
    if not ext or "/" in ext:
        raise ShardFormatError(f"invalid extension {ext!r}")


def _tarinfo(name: str, size: int) -> tarfile.TarInfo:
    # Fixed metadata keeps shard bytes deterministic across runs and hosts.
    info = tarfile.TarInfo(name=name)
    info.size = size
    info.mtime = 0
    info.uid = info.gid = 0
    info.uname = info.gname = ""
    info.mode = 0o644
    return info


def write_shard(samples: list[SampleRecord]) -> bytes:
    """Serialize samples to tar bytes, entries contiguous per key, insertion order."""
    if not samples:
        raise ShardFormatError("a shard must contain at least one sample")
    seen: set[str] = set()
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for sample in samples:
            if sample.key in seen:
                raise ShardFormatError(f"duplicate sample key {sample.key!r} in shard")
            seen.add(sample.key)
            if not sample.files:
                raise ShardFormatError(f"sample {sample.key!r} has no files")
            for name, (ext, data) in sample.files.items():
                info = _tarinfo(f"{sample.key}_{name}.{ext}", len(data))
                tar.addfile(info, io.BytesIO(data))
    return buf.getvalue()


def _split_entry_name(entry: str) -> tuple[str, str, str]:
    if "_" not in entry:
        raise ShardFormatError(f"entry {entry!r} has no key_field separator")
    key, file_part = entry.rsplit("_", 1)
    if "." not in file_part:
        raise ShardFormatError(f"entry {entry!r} has no extension")
    name, ext = file_part.split(".", 1)
    _check_field_name(name, ext)
    if not key:
        raise ShardFormatError(f"entry {entry!r} has an empty key")
    return key, name, ext


def read_shard(data: bytes) -> list[SampleRecord]:
    """Group contiguous tar entries by key prefix; round trip of write_shard."""
    try:
        tar = tarfile.open(fileobj=io.BytesIO(data), mode="r")
    except tarfile.TarError as exc:
        raise ShardFormatError(f"malformed tar: {exc}") from exc
    records: list[SampleRecord] = []
    closed: set[str] = set()
    current: SampleRecord | None = None
    with tar:
        for member in tar:
            if not member.isfile():
                continue
            key, name, ext = _split_entry_name(member.name)
            payload = tar.extractfile(member)
            assert payload is not None
            body = payload.read()
            if current is None or current.key != key:
                if current is not None:
                    closed.add(current.key)
                if key in closed:
                    raise ShardFormatError(f"entries for key {key!r} are not contiguous")
                current = SampleRecord(key=key)
                records.append(current)
            current.add(name, ext, body)
    return records
