"""Deterministic derivation of independent RNG streams.

Every stochastic step in the engine draws from a stream addressed by
(seed, *path), so adding a new consumer never perturbs existing ones and
a run is a pure function of its config seed.
"""

from __future__ import annotations

import zlib

import numpy as np


def _entropy_words(seed: int, path: tuple[int | str, ...]) -> list[int]:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    words = [int(seed)]
    for part in path:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            if part < 0:
                raise ValueError("path components must be non-negative")
            words.append(int(part))
    return words


def derive_rng(seed: int, *path: int | str) -> np.random.Generator:
    """Generator for the stream addressed by (seed, *path).

    String components are folded through crc32 so the address is stable
    across processes (Python's hash() is salted and must not be used here).
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_entropy_words(seed, path))))


def fold_seed(seed: int, *path: int | str) -> int:
    """Collapse (seed, *path) into a single u64 usable as a child seed."""
    seq = np.random.SeedSequence(_entropy_words(seed, path))
    return int(seq.generate_state(1, np.uint64)[0])
