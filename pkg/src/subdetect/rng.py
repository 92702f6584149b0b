"""Reproducible random streams addressed by ``(seed, index, ...)``.

Each stream is a Philox generator whose 128-bit key packs the 64-bit seed
with a 64-bit stream index, so stream ``k`` never depends on how many other
streams were drawn before it or on which worker draws it.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _as_seed(seed) -> int:
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed, index: int = 0) -> np.random.Generator:
    """Independent generator for stream ``index`` under ``seed``."""
    seed = _as_seed(seed)
    index = int(index) & _MASK64
    return np.random.Generator(np.random.Philox(key=seed | (index << 64)))


def child_seed(seed, *path: int) -> int:
    """Derive a 64-bit seed for a nested stream, e.g. ``(amplitude, replication)``."""
    s = _as_seed(seed)
    for idx in path:
        s = int(stream(s, idx).integers(0, _MASK64, dtype=np.uint64, endpoint=True))
    return s
