"""Deterministic random streams.

Every stream is a Philox (counter-based) generator keyed by a master seed and a
tuple of tags. Tags may be ints or strings; strings are mapped through CRC32 so
the key is stable across processes and Python hash randomisation. Gaussian
variates come from numpy's ``Generator.standard_normal`` (ziggurat method), so
a given stream always yields the same bits regardless of scheduling.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag(t) -> int:
    if isinstance(t, (bool, np.bool_)):
        return int(t)
    if isinstance(t, (int, np.integer)):
        if t < 0:
            raise ValueError("integer tags must be nonnegative")
        return int(t)
    if isinstance(t, float):
        # n-grid values are floats in a few places; key on the exact bit pattern
        return int(np.float64(t).view(np.uint64))
    return zlib.crc32(str(t).encode("utf-8"))


def stream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for ``(seed, *tags)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_tag(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *tags) -> int:
    """A 63-bit integer seed derived from ``(seed, *tags)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_tag(t) for t in tags))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & ((1 << 63) - 1)
