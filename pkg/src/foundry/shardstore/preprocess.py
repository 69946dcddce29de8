"""Three-stage preprocessing: frames -> episodes -> shards.

Stage 1 windows every episode into single-sample tars under ``frames/``;
stage 2 groups the sample tars by episode under ``episodes/``; stage 3 sorts
all samples by key, permutes them with a seeded shuffle, and chunks them into
fixed-size tars under ``shards/`` together with ``manifest.jsonl`` and
``stats.json``.

Workers own disjoint episode subsets and communicate through files plus one
final statistics merge, so a multi-worker run produces the same sample
multiset (and byte-identical shards) as a single-worker run.
"""

from __future__ import annotations

import concurrent.futures
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from foundry.config import ConfigSchema, ResolvedConfig, SchemaEntry
from foundry.geometry import relative_action_vectors
from foundry.rng import SplitMix64
from foundry.shardstore.manifest import ManifestEntry, write_manifest
from foundry.shardstore.payload import encode_array
from foundry.shardstore.records import SampleRecord, read_shard, write_shard
from foundry.shardstore.registry import create_converter
from foundry.stats.dataset import DatasetStats, FieldAccumulator, merge_stats, parse_stats, serialize_stats
from foundry.stats.moments import DataQualityError
from foundry.windowing import Episode, Sample, WindowSpec, enumerate_samples, pad

RELATIVE_SUFFIX = "rel"
IMAGE_EXT = "jpg"


class PreprocessError(RuntimeError):
    pass


@dataclass
class PreprocessSpec:
    input_path: str
    output_path: str
    converter: str = "generic_episode"
    converter_params: dict = dc_field(default_factory=dict)
    window: WindowSpec = dc_field(default_factory=WindowSpec)
    action_fields: list[str] = dc_field(default_factory=list)
    proprioception_fields: list[str] = dc_field(default_factory=list)
    pose_field_groups: list[str] = dc_field(default_factory=list)
    image_timestep_offsets: list[int] = dc_field(default_factory=lambda: [0])
    shard_size: int = 1024
    workers: int = 1
    seed: int = 0
    stats_scope: str = "per_timestep"
    tdigest_delta: float = 100.0

    def __post_init__(self) -> None:
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.stats_scope not in ("global", "per_timestep"):
            raise ValueError(f"unknown stats scope {self.stats_scope!r}")
        if not self.image_timestep_offsets:
            raise ValueError("image_timestep_offsets must be nonempty")
        for name in (*self.action_fields, *self.proprioception_fields, *self.pose_field_groups):
            if "_" in name:
                raise ValueError(f"field name {name!r} must not contain underscores")

    def numeric_fields(self) -> list[str]:
        """All numeric fields stored per sample, relative fields included."""
        out = list(dict.fromkeys([*self.action_fields, *self.proprioception_fields]))
        for group in self.pose_field_groups:
            rel = group + RELATIVE_SUFFIX
            if rel not in out:
                out.append(rel)
        return out

    @staticmethod
    def config_schema() -> ConfigSchema:
        return ConfigSchema(
            {
                "input_path": SchemaEntry("string", required=True),
                "output_path": SchemaEntry("string", required=True),
                "converter.type": SchemaEntry("string", "generic_episode"),
                "converter.params": SchemaEntry("nested"),
                "window.n_past": SchemaEntry("int", 0),
                "window.n_future": SchemaEntry("int", 0),
                "window.pad_strategy": SchemaEntry("string", "copy"),
                "window.max_padding_left": SchemaEntry("int", 0),
                "window.max_padding_right": SchemaEntry("int", 0),
                "action_fields": SchemaEntry("list", []),
                "proprioception_fields": SchemaEntry("list", []),
                "pose_field_groups": SchemaEntry("list", []),
                "image_timestep_offsets": SchemaEntry("list", [0]),
                "shard_size": SchemaEntry("int", 1024),
                "workers": SchemaEntry("int", 1),
                "seed": SchemaEntry("int", 0),
                "stats_scope": SchemaEntry("string", "per_timestep"),
                "tdigest_delta": SchemaEntry("float", 100.0),
            }
        )

    @classmethod
    def from_config(cls, cfg: ResolvedConfig) -> "PreprocessSpec":
        return cls(
            input_path=cfg["input_path"],
            output_path=cfg["output_path"],
            converter=cfg["converter.type"],
            converter_params=cfg.get("converter.params") or {},
            window=WindowSpec(
                n_past=cfg["window.n_past"],
                n_future=cfg["window.n_future"],
                pad_strategy=cfg["window.pad_strategy"],
                max_padding_left=cfg["window.max_padding_left"],
                max_padding_right=cfg["window.max_padding_right"],
            ),
            action_fields=list(cfg["action_fields"]),
            proprioception_fields=list(cfg["proprioception_fields"]),
            pose_field_groups=list(cfg["pose_field_groups"]),
            image_timestep_offsets=list(cfg["image_timestep_offsets"]),
            shard_size=cfg["shard_size"],
            workers=cfg["workers"],
            seed=cfg["seed"],
            stats_scope=cfg["stats_scope"],
            tdigest_delta=cfg["tdigest_delta"],
        )


@dataclass
class PreprocessResult:
    output_path: Path
    manifest: list[ManifestEntry]
    sample_count: int
    stats: DatasetStats


def _relative_window(sample: Sample, field: str, strategy: str) -> np.ndarray:
    # Relative actions are computed against the anchor-timestep actual pose
    # over the unpadded rows only, then padded with the window's strategy:
    # synthesized pose rows (zeros, mirrors) are not decodable rotations.
    window = sample.fields[field]
    lo = sample.pad_left
    hi = window.shape[0] - sample.pad_right
    anchor_vec = window[sample.anchor_relative_idx]
    rel = relative_action_vectors(anchor_vec, window[lo:hi])
    return pad(rel, sample.pad_left, sample.pad_right, strategy)


def _build_record(episode: Episode, task: str, sample: Sample, spec: PreprocessSpec,
                  numeric: dict[str, np.ndarray]) -> SampleRecord:
    record = SampleRecord(key=f"{episode.id}_{sample.anchor_t:06d}")
    meta = {
        "task": task,
        "episode_id": episode.id,
        "anchor_t": sample.anchor_t,
        "anchor_relative_idx": sample.anchor_relative_idx,
        "pad_left": sample.pad_left,
        "pad_right": sample.pad_right,
        "n_past": sample.n_past,
        "n_future": sample.n_future,
    }
    record.add("meta", "json", json.dumps(meta, sort_keys=True).encode("utf-8"))
    for name, arr in numeric.items():
        record.add(name, "bin", encode_array(arr))
    for camera in sorted(episode.blobs):
        blobs = episode.blobs[camera]
        # Image timesteps are anchor-relative offsets, clamped to the episode.
        for k, offset in enumerate(spec.image_timestep_offsets):
            idx = min(max(sample.anchor_t + offset, 0), len(blobs) - 1)
            name = camera if k == 0 and offset == 0 else f"{camera}o{k}"
            record.add(name, IMAGE_EXT, blobs[idx])
    return record


def _new_accumulators(spec: PreprocessSpec, dims: dict[str, int]) -> dict[str, FieldAccumulator]:
    per_timestep = spec.stats_scope == "per_timestep"
    return {
        name: FieldAccumulator(
            name,
            dims[name],
            per_timestep=per_timestep,
            window_len=spec.window.window_len if per_timestep else None,
            delta=spec.tdigest_delta,
        )
        for name in dims
    }


def _process_episodes(spec: PreprocessSpec, worker_id: int, out_root: Path) -> tuple[bytes, int]:
    """Stage 1+2 for this worker's episode subset; returns (stats bytes, samples)."""
    converter = create_converter(spec.converter, {"input_path": spec.input_path,
                                                  **spec.converter_params})
    frames_dir = out_root / "frames"
    episodes_dir = out_root / "episodes"
    accumulators: dict[str, FieldAccumulator] | None = None
    sample_count = 0

    for index, (episode, task) in enumerate(converter.read_episodes()):
        if index % spec.workers != worker_id:
            continue
        try:
            samples = enumerate_samples(episode, spec.window)
            records = []
            windows: dict[str, list[np.ndarray]] = {name: [] for name in spec.numeric_fields()}
            for sample in samples:
                numeric: dict[str, np.ndarray] = {}
                for name in spec.numeric_fields():
                    if name.endswith(RELATIVE_SUFFIX) and name[: -len(RELATIVE_SUFFIX)] in spec.pose_field_groups:
                        base = name[: -len(RELATIVE_SUFFIX)]
                        numeric[name] = _relative_window(sample, base, spec.window.pad_strategy)
                    else:
                        if name not in sample.fields:
                            raise PreprocessError(f"field {name!r} missing from episode data")
                        numeric[name] = sample.fields[name]
                    windows[name].append(numeric[name])
                record = _build_record(episode, task, sample, spec, numeric)
                records.append(record)
                (frames_dir / f"{record.key}.tar").write_bytes(write_shard([record]))
            if records:
                (episodes_dir / f"{episode.id}.tar").write_bytes(write_shard(records))
            if samples:
                if accumulators is None:
                    dims = {name: arrs[0].shape[1] for name, arrs in windows.items()}
                    accumulators = _new_accumulators(spec, dims)
                for name, arrs in windows.items():
                    accumulators[name].add_windows(np.stack(arrs))
                sample_count += len(samples)
        except (DataQualityError, PreprocessError, ValueError, KeyError) as exc:
            raise PreprocessError(f"episode {episode.id!r}: {exc}") from exc

    if accumulators is None:
        stats = DatasetStats()
    else:
        stats = DatasetStats(
            fields={name: acc.finalize() for name, acc in accumulators.items()},
            sample_count=sample_count,
            scope=spec.stats_scope,
            window_shape=(spec.window.n_past, spec.window.n_future)
            if spec.stats_scope == "per_timestep"
            else None,
        )
    return serialize_stats(stats), sample_count


def _assemble_shards(spec: PreprocessSpec, out_root: Path) -> list[ManifestEntry]:
    """Stage 3: pseudo-random fixed-size grouping of all samples."""
    episodes_dir = out_root / "episodes"
    shards_dir = out_root / "shards"
    records: list[SampleRecord] = []
    for tar_path in sorted(episodes_dir.glob("*.tar")):
        records.extend(read_shard(tar_path.read_bytes()))
    if not records:
        raise PreprocessError("preprocessing produced no samples")
    records.sort(key=lambda r: r.key)
    keys = [r.key for r in records]
    if len(set(keys)) != len(keys):
        raise PreprocessError("duplicate sample keys across episodes")
    rng = SplitMix64.for_role(spec.seed, 0, "shard-shuffle")
    rng.shuffle(records)
    entries: list[ManifestEntry] = []
    for i in range(0, len(records), spec.shard_size):
        chunk = records[i : i + spec.shard_size]
        shard_id = f"{i // spec.shard_size:08d}"
        (shards_dir / f"shard_{shard_id}.tar").write_bytes(write_shard(chunk))
        entries.append(ManifestEntry(shard=shard_id, num_sequences=len(chunk)))
    (shards_dir / "manifest.jsonl").write_bytes(write_manifest(entries))
    return entries


def preprocess(spec: PreprocessSpec) -> PreprocessResult:
    """Run the full pipeline; see the module docstring for the stage layout."""
    out_root = Path(spec.output_path)
    for sub in ("frames", "episodes", "shards"):
        (out_root / sub).mkdir(parents=True, exist_ok=True)

    if spec.workers == 1:
        partials = [_process_episodes(spec, 0, out_root)]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [
                pool.submit(_process_episodes, spec, worker_id, out_root)
                for worker_id in range(spec.workers)
            ]
            partials = [f.result() for f in futures]

    stats = DatasetStats()
    sample_count = 0
    for stats_bytes, samples in partials:
        stats = merge_stats(stats, parse_stats(stats_bytes))
        sample_count += samples

    entries = _assemble_shards(spec, out_root)
    (out_root / "shards" / "stats.json").write_bytes(serialize_stats(stats))
    return PreprocessResult(
        output_path=out_root,
        manifest=entries,
        sample_count=sample_count,
        stats=stats,
    )
