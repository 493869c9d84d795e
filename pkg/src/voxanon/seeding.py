"""Deterministic per-utterance random streams.

Every randomized stage draws from a generator keyed by (seed, utterance_id)
so that results do not depend on iteration order or worker count.  Python's
builtin hash() is salted per process and must not be used here; a fixed
cryptographic digest keeps the mapping stable across runs and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_SEED = 2024


def utterance_rng(seed: int | None, utterance_id: str) -> np.random.Generator:
    """Return an independent Generator for one utterance.

    seed None means fresh OS entropy (explicitly non-reproducible).
    """
    if seed is None:
        return np.random.default_rng()
    digest = hashlib.sha256(f"{int(seed)}\x1f{utterance_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))
