"""Deterministic RNG substream derivation.

Substreams are derived from (seed, *labels): each label is hashed with
sha256 to a 32-bit word and the words form the SeedSequence spawn key, so
streams are stable across platforms and process boundaries.
"""

from __future__ import annotations

import hashlib

import numpy as np


def rng_stream(seed: int, *labels) -> np.random.Generator:
    key = tuple(
        int.from_bytes(hashlib.sha256(str(label).encode("utf-8")).digest()[:4], "little") for label in labels
    )
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))
