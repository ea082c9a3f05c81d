"""Model-behaviour probes: encoder similarity and incongruent features."""

from __future__ import annotations

import numpy as np

from .errors import DataError


def cosine_probe(h_noisy: np.ndarray, h_clean: np.ndarray) -> float:
    """Mean cosine similarity between paired rows of two state matrices."""
    a = np.asarray(h_noisy, dtype=np.float64)
    b = np.asarray(h_clean, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DataError(f"state shape mismatch: {a.shape} vs {b.shape}")
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    if (norms_a == 0).any() or (norms_b == 0).any():
        raise DataError("zero-norm hidden state row")
    cos = (a * b).sum(axis=1) / (norms_a * norms_b)
    return float(cos.mean())


def incongruent_shuffle(features: np.ndarray, seed: int = 0) -> np.ndarray:
    """Give every sample the features of its predecessor (cyclic shift).

    A fixed derangement: no sample keeps its own features, for any N >= 2.
    The seed argument is accepted for interface uniformity; the shift is
    deterministic by design.
    """
    arr = np.asarray(features)
    if len(arr) < 2:
        raise DataError("incongruent decoding needs at least 2 samples")
    return np.roll(arr, 1, axis=0)
