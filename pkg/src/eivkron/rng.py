"""Hierarchical, position-derived random streams.

A stream is a master seed plus a path of tags, e.g.
``("rate", "cell", 3, "trial", 17, "Z1")``. Each tag is mapped to a 32-bit
word (integers as themselves, strings through CRC-32) and the resulting tuple
becomes the ``spawn_key`` of a :class:`numpy.random.SeedSequence`, whose hash
mixing turns (seed, path) into the generator state. Two streams with the same
seed and path always produce identical draws, regardless of the order in
which trials are scheduled.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _word(tag) -> int:
    if isinstance(tag, (int, np.integer)) and not isinstance(tag, bool):
        if tag < 0:
            raise ValueError("integer stream tags must be non-negative")
        return int(tag)
    return zlib.crc32(str(tag).encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple = ()

    def child(self, *tags) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(tags))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(_word(t) for t in self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def label(self) -> str:
        return "/".join(str(t) for t in (self.seed,) + self.path)


def as_generator(stream) -> np.random.Generator:
    """Accept an :class:`RngStream`, a Generator or an int seed."""
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    return np.random.default_rng(stream)
