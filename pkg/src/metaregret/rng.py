"""Repo-wide random streams.

Every stream is a PCG64 generator keyed by ``(seed, purpose tag, index)`` so
that, e.g., the 17th sampled game of a distribution does not depend on how
many other games or network initialisations were drawn before it.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def tag_key(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence([int(seed) & _MASK64, tag_key(tag), int(index) & _MASK64])
    return np.random.Generator(np.random.PCG64(seq))
