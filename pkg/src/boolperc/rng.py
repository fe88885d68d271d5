"""Seedable counter-based random streams.

Every Monte Carlo replicate draws from its own Philox substream, derived
deterministically from ``(seed, stream_id, *keys)``.  Replicates can therefore
be farmed out to any number of workers without changing results.
"""
from __future__ import annotations

import os
import zlib
from dataclasses import dataclass

import numpy as np

SEED_ENV = "BOOLPERC_SEED"
DEFAULT_SEED = 20240601


def default_seed() -> int:
    value = os.environ.get(SEED_ENV)
    return int(value) if value else DEFAULT_SEED


def experiment_id(name: str) -> int:
    """Stable integer id for an experiment label."""
    return zlib.crc32(name.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    keys: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def child(self, *keys: int | str) -> "RngStream":
        ints = tuple(experiment_id(k) if isinstance(k, str) else int(k) for k in keys)
        return RngStream(self.seed, self.stream_id, self.keys + ints)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.keys)
        return np.random.Generator(np.random.Philox(ss))

    def record(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id, "keys": list(self.keys)}


def as_stream(rng: RngStream | int | None) -> RngStream:
    if rng is None:
        return RngStream(default_seed())
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return as_stream(rng).generator()
