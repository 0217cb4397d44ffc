"""Seeded random streams, one independent substream per name."""
from __future__ import annotations

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for ``(seed, name)``; the same pair always yields the same stream."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_name_key(name),))
    return np.random.Generator(np.random.PCG64(ss))


class MissingSeed(ValueError):
    """Randomness was requested without a seed."""


class Streams:
    """Lazily created named substreams sharing one root seed."""

    def __init__(self, seed: int | None):
        self.seed = seed
        self._streams: dict[str, np.random.Generator] = {}

    def __call__(self, name: str) -> np.random.Generator:
        if self.seed is None:
            raise MissingSeed(f"randomness requested for {name!r} but no seed was given")
        if name not in self._streams:
            self._streams[name] = substream(self.seed, name)
        return self._streams[name]
