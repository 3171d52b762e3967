"""Deterministic RNG streams derived from a base seed and a label path.

Every random choice in the package draws from a generator built here, so a
run is reproducible from its seed alone and independent subtasks (one per
sentence, per candidate, per epoch) get decorrelated streams without any
shared mutable state.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_rng"]


def derive_seed(base_seed: int, *parts: object) -> int:
    """Hash (base_seed, *parts) into a 64-bit seed. Parts are stringified."""
    h = hashlib.sha256()
    h.update(str(int(base_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def derive_rng(base_seed: int, *parts: object) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(base_seed, *parts)))
