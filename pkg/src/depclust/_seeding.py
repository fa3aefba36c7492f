"""Deterministic seed derivation.

Every random choice in the package draws from a stream keyed on the master seed
plus a tuple of plain-data keys, so results do not depend on call order.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *keys: object) -> int:
    """Hash ``(seed, *keys)`` into a 64-bit unsigned seed.

    Keys must have a stable ``repr`` (ints, strings, tuples of those).
    """
    payload = repr((int(seed) & _MASK64,) + tuple(keys)).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def rng_for(seed: int, *keys: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))


def tie_choice(seed: int, k: int, n_candidates: int) -> int:
    # one independent stream per observation index k
    return int(np.random.default_rng([int(seed) & _MASK64, int(k)]).integers(n_candidates))
