"""Name-keyed converter registry.

Converters adapt a raw dataset layout into episodes; registering one at
import time makes it reachable from configuration by name.
"""

from __future__ import annotations

import abc
from typing import Callable, Iterator

from foundry.windowing import Episode


class ConverterError(ValueError):
    pass


class BaseConverter(abc.ABC):
    """Reads one raw dataset and yields (episode, task text) pairs.

    Subclasses fill in camera discovery and episode reading; ordering must be
    deterministic (sorted by episode id) so preprocessing is reproducible.
    """

    def __init__(self, params: dict | None = None):
        self.params = dict(params or {})

    @abc.abstractmethod
    def discover_cameras(self) -> list[str]:
        """Camera (blob) field names present in the dataset."""

    @abc.abstractmethod
    def read_episodes(self) -> Iterator[tuple[Episode, str]]:
        """Yield (episode, task description) in a deterministic order."""


_REGISTRY: dict[str, Callable[[dict], BaseConverter]] = {}


def register_converter(name: str, factory: Callable[[dict], BaseConverter]) -> None:
    if not name:
        raise ConverterError("converter name must be nonempty")
    if name in _REGISTRY:
        raise ConverterError(f"converter {name!r} is already registered")
    _REGISTRY[name] = factory


def registered_converters() -> list[str]:
    return sorted(_REGISTRY)


def create_converter(name: str, params: dict | None = None) -> BaseConverter:
    factory = _REGISTRY.get(name)
    if factory is None:
        raise ConverterError(
            f"unknown converter {name!r}; registered converters: {registered_converters()}"
        )
    return factory(dict(params or {}))
