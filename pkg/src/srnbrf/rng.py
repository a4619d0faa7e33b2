"""Named, splittable random streams.

Every stochastic step asks for a generator keyed by ``(seed, *tags)``. The
tags are hashed with CRC32 (stable across processes, unlike ``hash``) and fed
to :class:`numpy.random.SeedSequence`, so two stages with different tags never
share a stream and each stage can be replayed on its own.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(seed: int, tags) -> list[int]:
    words = [int(seed) & _MASK64]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            words.append(int(tag) & _MASK64)
        else:
            words.append(zlib.crc32(str(tag).encode("utf-8")))
    return words


def stream(seed: int, *tags) -> np.random.Generator:
    """Generator for the stream named by ``tags`` under ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy(seed, tags))))


def derive_seed(seed: int, *tags) -> int:
    """A 64-bit child seed, for handing a whole sub-computation its own root."""
    state = np.random.SeedSequence(_entropy(seed, tags)).generate_state(1, dtype=np.uint64)
    return int(state[0])
