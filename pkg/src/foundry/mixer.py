"""Deterministic streaming shuffle, shard splitting, and weighted dataset mixing.

Every random decision comes from the pinned generator in :mod:`foundry.rng`
seeded by (seed, epoch, role), so a pipeline's output is a pure function of
(spec, seed, epoch, node_rank, worker_id). Exhausted streams restart from
their beginning with an epoch-incremented shuffle, so mixing never starves.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from foundry.config import ConfigSchema, ResolvedConfig, SchemaEntry
from foundry.rng import SplitMix64
from foundry.shardstore.manifest import read_manifest
from foundry.shardstore.records import read_shard


class PipelineStageError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"pipeline stage {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class DatasetSource:
    manifest: str
    statistics: str = ""
    modality: str = "robotics"
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValueError("dataset weight must be positive")


@dataclass
class MixSpec:
    datasets: list[DatasetSource]
    batch_size: int = 32
    seed: int = 0
    epoch: int = 0
    shuffle_buffer_size: int = 100
    shuffle_initial: int = 10
    node_rank: int = 0
    num_nodes: int = 1
    worker_id: int = 0
    num_workers: int = 1

    def __post_init__(self) -> None:
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @staticmethod
    def config_schema() -> ConfigSchema:
        return ConfigSchema(
            {
                "dataset_manifest": SchemaEntry("list", required=True),
                "dataset_statistics": SchemaEntry("list", []),
                "dataset_modality": SchemaEntry("list", []),
                "dataset_weighting": SchemaEntry("list", []),
                "batch_size": SchemaEntry("int", 32),
                "seed": SchemaEntry("int", 0),
                "epoch": SchemaEntry("int", 0),
                "shuffle_buffer_size": SchemaEntry("int", 100),
                "shuffle_initial": SchemaEntry("int", 10),
                "data.normalization.method": SchemaEntry("string", "stddev"),
                "data.normalization.scope": SchemaEntry("string", "global"),
            }
        )

    @classmethod
    def from_config(cls, cfg: ResolvedConfig) -> "MixSpec":
        manifests = list(cfg["dataset_manifest"])
        stats = list(cfg["dataset_statistics"]) or [""] * len(manifests)
        modalities = list(cfg["dataset_modality"]) or ["robotics"] * len(manifests)
        weights = [float(w) for w in cfg["dataset_weighting"]] or [1.0] * len(manifests)
        if not (len(manifests) == len(stats) == len(modalities) == len(weights)):
            raise ValueError("dataset_* lists must have equal lengths")
        return cls(
            datasets=[
                DatasetSource(m, s, t, w)
                for m, s, t, w in zip(manifests, stats, modalities, weights)
            ],
            batch_size=cfg["batch_size"],
            seed=cfg["seed"],
            epoch=cfg["epoch"],
            shuffle_buffer_size=cfg["shuffle_buffer_size"],
            shuffle_initial=cfg["shuffle_initial"],
        )


def assign_shards(shards: list, node_rank: int, num_nodes: int,
                  worker_id: int, num_workers: int) -> list:
    """Double-modulo split: shard i to node i mod nodes, then position j to worker j mod workers."""
    if not 0 <= node_rank < num_nodes:
        raise ValueError(f"node_rank {node_rank} out of range for {num_nodes} nodes")
    if not 0 <= worker_id < num_workers:
        raise ValueError(f"worker_id {worker_id} out of range for {num_workers} workers")
    return list(shards)[node_rank::num_nodes][worker_id::num_workers]


def deterministic_shuffle(stream: Iterable, bufsize: int, initial: int,
                          seed: int, epoch: int, role: str = "shuffle") -> Iterator:
    """Buffered streaming shuffle, a deterministic permutation of the input.

    The buffer fills to ``initial`` before the first emission and to
    ``bufsize`` thereafter; each pull emits a generator-chosen slot. A buffer
    of one is the identity.
    """
    if bufsize < 1:
        raise ValueError("bufsize must be >= 1")
    rng = SplitMix64.for_role(seed, epoch, role)
    initial = max(1, min(initial, bufsize))
    buf: list = []
    it = iter(stream)
    exhausted = False
    target = initial
    while True:
        while not exhausted and len(buf) < target:
            try:
                buf.append(next(it))
            except StopIteration:
                exhausted = True
        if not buf:
            return
        i = rng.next_below(len(buf))
        buf[i], buf[-1] = buf[-1], buf[i]
        yield buf.pop()
        target = bufsize


StreamFactory = Callable[[int], Iterable]


def _start(source, epoch: int) -> Iterator:
    return iter(source(epoch)) if callable(source) else iter(source)


def mix(streams: list, weights: list[float], seed: int, epoch: int) -> Iterator:
    """Interleave streams, drawing stream k with probability w_k / sum(w).

    Each element of ``streams`` is either a re-iterable sequence or a factory
    ``epoch -> iterable``; factories get an incremented epoch each time their
    stream restarts.
    """
    if not streams:
        raise ValueError("mix requires at least one stream")
    if len(weights) != len(streams) or any(w <= 0 for w in weights):
        raise ValueError("weights must be positive and match the stream count")
    total = float(sum(weights))
    cumulative = []
    acc = 0.0
    for w in weights:
        acc += w
        cumulative.append(acc)
    rng = SplitMix64.for_role(seed, epoch, "mix")
    iters = [_start(s, epoch) for s in streams]
    epochs = [epoch] * len(streams)
    while True:
        r = rng.next_float() * total
        k = next(i for i, c in enumerate(cumulative) if r < c or i == len(cumulative) - 1)
        try:
            item = next(iters[k])
        except StopIteration:
            epochs[k] += 1
            iters[k] = _start(streams[k], epochs[k])
            try:
                item = next(iters[k])
            except StopIteration:
                raise ValueError(f"stream {k} is empty") from None
        yield k, item


def batch_stage(batch_size: int, partial: bool = False):
    """Group items into lists of ``batch_size``, dropping the final partial batch."""

    def stage(stream: Iterable) -> Iterator[list]:
        batch: list = []
        for item in stream:
            batch.append(item)
            if len(batch) == batch_size:
                yield batch
                batch = []
        if batch and partial:
            yield batch

    stage.is_batching = True  # type: ignore[attr-defined]
    return stage


def shard_list_stage(manifest_path: str | Path):
    """Source stage: shard tar paths listed by a manifest, in manifest order."""

    def stage(_stream: Iterable) -> Iterator[Path]:
        manifest_file = Path(manifest_path)
        root = manifest_file.parent
        for entry in read_manifest(manifest_file.read_bytes()):
            yield root / f"shard_{entry.shard}.tar"

    return stage


def shuffle_stage(bufsize: int, initial: int, seed: int, epoch: int, role: str = "shuffle"):
    def stage(stream: Iterable) -> Iterator:
        return deterministic_shuffle(stream, bufsize, initial, seed, epoch, role)

    return stage


def split_stage(node_rank: int, num_nodes: int, worker_id: int, num_workers: int):
    def stage(stream: Iterable) -> Iterator:
        yield from assign_shards(list(stream), node_rank, num_nodes, worker_id, num_workers)

    return stage


def read_shards_stage():
    """Expand shard paths into their sample records."""

    def stage(stream: Iterable) -> Iterator:
        for path in stream:
            yield from read_shard(Path(path).read_bytes())

    return stage


def map_stage(fn: Callable):
    def stage(stream: Iterable) -> Iterator:
        return (fn(item) for item in stream)

    return stage


def select_stage(predicate: Callable):
    def stage(stream: Iterable) -> Iterator:
        return (item for item in stream if predicate(item))

    return stage


def _guarded(stream: Iterable, index: int) -> Iterator:
    try:
        yield from stream
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(index, exc) from exc


def build_pipeline(stages: list) -> Iterator:
    """Compose an ordered stage list; the last stage must be a batching stage.

    A stage is a callable stream -> stream; failures during iteration surface
    as :class:`PipelineStageError` carrying the stage index.
    """
    if not stages:
        raise ValueError("stage list must be nonempty")
    if not getattr(stages[-1], "is_batching", False):
        raise ValueError("the final stage must be a batching stage")
    stream: Iterable = iter(())
    for index, stage in enumerate(stages):
        stream = _guarded(stage(stream), index)
    return iter(stream)


def dataset_sample_stages(source: DatasetSource, spec: MixSpec, dataset_index: int) -> list:
    """The standard per-dataset stage chain: list, shuffle, split, read."""
    return [
        shard_list_stage(source.manifest),
        shuffle_stage(
            spec.shuffle_buffer_size,
            spec.shuffle_initial,
            spec.seed,
            spec.epoch,
            role=f"shuffle/{dataset_index}",
        ),
        split_stage(spec.node_rank, spec.num_nodes, spec.worker_id, spec.num_workers),
        read_shards_stage(),
    ]


class MixedStream:
    """Weighted mixture of the spec's datasets with checkpointable position.

    Yields (dataset_index, SampleRecord). ``state()`` captures (epoch,
    emitted count); :meth:`restore` rebuilds the pipeline and fast-forwards
    deterministically to that position.
    """

    def __init__(self, spec: MixSpec, extra_stages: list | None = None,
                 _skip: int = 0):
        self.spec = spec
        self.epoch = spec.epoch
        self.emitted = 0
        factories = []
        for index, source in enumerate(spec.datasets):
            factories.append(self._factory(source, index, extra_stages or []))
        self._stream = mix(factories, [d.weight for d in spec.datasets], spec.seed, spec.epoch)
        for _ in range(_skip):
            next(self._stream)
            self.emitted += 1

    def _factory(self, source: DatasetSource, index: int, extra_stages: list) -> StreamFactory:
        spec = self.spec

        def factory(epoch: int) -> Iterator:
            stages = [
                shard_list_stage(source.manifest),
                shuffle_stage(
                    spec.shuffle_buffer_size,
                    spec.shuffle_initial,
                    spec.seed,
                    epoch,
                    role=f"shuffle/{index}",
                ),
                split_stage(spec.node_rank, spec.num_nodes, spec.worker_id, spec.num_workers),
                read_shards_stage(),
                *extra_stages,
            ]
            stream: Iterable = iter(())
            for stage_index, stage in enumerate(stages):
                stream = _guarded(stage(stream), stage_index)
            return iter(stream)

        return factory

    def __iter__(self) -> "MixedStream":
        return self

    def __next__(self):
        item = next(self._stream)
        self.emitted += 1
        return item

    def state(self) -> dict:
        return {"epoch": self.epoch, "emitted": self.emitted}

    @classmethod
    def restore(cls, spec: MixSpec, state: dict, extra_stages: list | None = None) -> "MixedStream":
        import dataclasses

        spec = dataclasses.replace(spec, epoch=state["epoch"])
        return cls(spec, extra_stages=extra_stages, _skip=state["emitted"])


def mixed_batches(spec: MixSpec, extra_stages: list | None = None) -> Iterator[list]:
    """Batches of (dataset_index, record), final partial batch dropped."""
    return batch_stage(spec.batch_size)(MixedStream(spec, extra_stages))


def mix_preview(spec: MixSpec, draws: int) -> dict:
    """Empirical mixing proportions over ``draws`` samples."""
    counts = [0] * len(spec.datasets)
    stream = MixedStream(spec)
    for _ in range(draws):
        k, _record = next(stream)
        counts[k] += 1
    total = float(sum(counts)) or 1.0
    weights = [d.weight for d in spec.datasets]
    wsum = float(sum(weights))
    return {
        "draws": draws,
        "counts": counts,
        "proportions": [c / total for c in counts],
        "expected": [w / wsum for w in weights],
    }
