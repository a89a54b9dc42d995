"""Seeded random number generation.

Every random draw in the project flows through here so that a run is fully
determined by its seeds.  The pinned algorithm is numpy's PCG64 bit
generator; child streams are derived with SeedSequence from the seed plus a
short string tag, so unrelated consumers (weight init, shuffling, dropout,
image synthesis) never share a stream.
"""

from __future__ import annotations

import numpy as np


def _words(tag: str) -> list[int]:
    return [b for b in tag.encode("utf-8")]


def make_rng(seed: int, tag: str = "") -> np.random.Generator:
    """Generator for `seed`, on an independent stream per `tag`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed] + _words(tag))))


def derive_seeds(seed: int, n: int, tag: str = "") -> list[int]:
    """n reproducible 63-bit child seeds of `seed`."""
    state = np.random.SeedSequence([seed] + _words(tag)).generate_state(n, dtype=np.uint64)
    # keep seeds inside the positive int64 range so they serialize everywhere
    return [int(s >> 1) for s in state]
