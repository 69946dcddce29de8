"""Deterministic 64-bit PRNG for shuffling, mixing, and shard assembly.

The generator is pinned so that identical (seed, epoch, role) triples
reproduce identical draw sequences across processes and languages; the exact
algorithm is documented in docs/formats.md and must not change without a
format version bump.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def scramble(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def seed_state(seed: int, epoch: int, role: str) -> int:
    """Fold (seed, epoch, role) into one 64-bit splitmix state."""
    h = fnv1a64(role.encode("utf-8"))
    h = scramble(h ^ (seed & MASK64))
    h = scramble(h ^ (epoch & MASK64))
    return h


class SplitMix64:
    """splitmix64 stream: state steps by the golden gamma, output is scrambled state."""

    __slots__ = ("_state",)

    def __init__(self, state: int):
        self._state = state & MASK64

    @classmethod
    def for_role(cls, seed: int, epoch: int, role: str) -> "SplitMix64":
        return cls(seed_state(seed, epoch, role))

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return scramble(self._state)

    def next_below(self, n: int) -> int:
        """Draw an integer in [0, n) as next_u64() mod n."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_float(self) -> float:
        """Draw a float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates from the high index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
