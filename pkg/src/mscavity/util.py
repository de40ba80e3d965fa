"""Small shared helpers: seeded per-purpose RNG streams, float formatting."""

from __future__ import annotations

import hashlib

import numpy as np


def stream_rng(seed: int, name: str) -> np.random.Generator:
    """Deterministic generator for one named purpose.

    Streams with different names are statistically independent even for the
    same base seed, and adding a new stream never shifts existing ones.
    """
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.default_rng(np.random.SeedSequence((int(seed), tag)))


def fmt(value: float) -> str:
    """Shortest decimal form that round-trips a float64 exactly."""
    return repr(float(value))
