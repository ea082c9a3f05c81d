"""Keyed random-number streams.

Every stochastic decision in the pipeline draws from a generator derived
from (seed, context labels) with a keyed hash, so results never depend on
processing order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(seed: int, *context: int | str) -> int:
    """Collapse a seed plus context labels into a stable 64-bit key."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for part in context:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")


def derive_rng(seed: int, *context: int | str) -> np.random.Generator:
    """A PCG64 generator keyed by (seed, context). Same inputs, same stream."""
    return np.random.Generator(np.random.PCG64(derive_key(seed, *context)))
