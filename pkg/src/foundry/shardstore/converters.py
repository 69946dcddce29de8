"""Built-in dataset converters.

generic_episode: one directory per episode holding an ``episode.json``
metadata file, one ``<field>.bin`` numeric payload per low-dimensional field,
and one subdirectory per camera whose files (sorted by name) are the
per-timestep image blobs.

csv_episode: one ``<episode_id>.csv`` per episode, header cells named
``field.column``; a toy format for tests and small corpora.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterator

import numpy as np

from foundry.shardstore.payload import decode_array
from foundry.shardstore.registry import BaseConverter, ConverterError, register_converter
from foundry.windowing import Episode


class GenericEpisodeConverter(BaseConverter):
    def __init__(self, params: dict | None = None):
        super().__init__(params)
        self.root = Path(self.params["input_path"])
        if not self.root.is_dir():
            raise ConverterError(f"input path {self.root} is not a directory")

    def _episode_dirs(self) -> list[Path]:
        return sorted(p for p in self.root.iterdir() if p.is_dir())

    def discover_cameras(self) -> list[str]:
        dirs = self._episode_dirs()
        if not dirs:
            return []
        return sorted(p.name for p in dirs[0].iterdir() if p.is_dir())

    def read_episodes(self) -> Iterator[tuple[Episode, str]]:
        for ep_dir in self._episode_dirs():
            meta_path = ep_dir / "episode.json"
            try:
                meta = json.loads(meta_path.read_text()) if meta_path.is_file() else {}
                fields = {
                    p.stem: decode_array(p.read_bytes())
                    for p in sorted(ep_dir.glob("*.bin"))
                }
                blobs = {
                    cam.name: [f.read_bytes() for f in sorted(cam.iterdir())]
                    for cam in sorted(p for p in ep_dir.iterdir() if p.is_dir())
                }
                episode = Episode(
                    id=str(meta.get("id", ep_dir.name)),
                    fields=fields,
                    blobs=blobs,
                )
            except (ValueError, OSError) as exc:
                raise ConverterError(f"episode {ep_dir.name!r}: {exc}") from exc
            yield episode, str(meta.get("task", ""))


class CsvEpisodeConverter(BaseConverter):
    def __init__(self, params: dict | None = None):
        super().__init__(params)
        self.root = Path(self.params["input_path"])
        self.task = str(self.params.get("task", ""))
        if not self.root.is_dir():
            raise ConverterError(f"input path {self.root} is not a directory")

    def discover_cameras(self) -> list[str]:
        return []

    def read_episodes(self) -> Iterator[tuple[Episode, str]]:
        for path in sorted(self.root.glob("*.csv")):
            try:
                with path.open(newline="") as handle:
                    reader = csv.reader(handle)
                    header = next(reader)
                    rows = [[float(cell) for cell in row] for row in reader]
            except (StopIteration, ValueError, OSError) as exc:
                raise ConverterError(f"episode {path.stem!r}: {exc}") from exc
            columns: dict[str, list[int]] = {}
            for i, cell in enumerate(header):
                name = cell.split(".", 1)[0]
                columns.setdefault(name, []).append(i)
            data = np.asarray(rows, dtype=np.float64)
            fields = {name: data[:, idx] for name, idx in columns.items()}
            yield Episode(id=path.stem, fields=fields), self.task


register_converter("generic_episode", GenericEpisodeConverter)
register_converter("csv_episode", CsvEpisodeConverter)
