"""Counter-based random substreams.

Every random draw in the package comes from a Philox generator whose key is
derived from the master seed and whose counter is set from a small tuple of
integers (slot, user, chunk, ...). Two draws with different tuples never
share counter space, so results do not depend on evaluation order or on how
work is split between threads.
"""
from __future__ import annotations

import zlib
from functools import lru_cache

import numpy as np

# stream tags; stable across releases because they feed the counter
USERS = 1
DEMANDS = 2
CHANNEL = 3
OVERLAP = 4
OUTAGE = 5


@lru_cache(maxsize=256)
def _key(seed: int, tag: int) -> tuple:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(tag)])
    return tuple(int(x) for x in ss.generate_state(2, dtype=np.uint64))


def substream(seed: int, tag: int, *counter: int) -> np.random.Generator:
    """Generator for the stream ``(seed, tag)`` positioned at ``counter``.

    ``counter`` may hold up to three non-negative integers; they occupy the
    upper words of Philox's 256-bit counter, leaving the lowest word for the
    draws themselves.
    """
    if len(counter) > 3:
        raise ValueError("at most three counter words")
    words = [0, 0, 0, 0]
    for i, c in enumerate(reversed(counter)):
        if c < 0:
            raise ValueError("counter words must be non-negative")
        words[3 - i] = int(c)
    bitgen = np.random.Philox(key=np.array(_key(int(seed), int(tag)), dtype=np.uint64), counter=np.array(words, dtype=np.uint64))
    return np.random.Generator(bitgen)


def text_tag(name: str) -> int:
    """Stable integer tag for a free-form stream name."""
    return zlib.crc32(name.encode()) + 1000
