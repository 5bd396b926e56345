"""Derivation of independent random streams from a master seed.

Every stochastic routine in the package receives either an explicit
``numpy.random.Generator`` or a ``(seed, *path)`` address resolved through
:func:`substream`.  Streams are keyed by value, not by draw order, so results
do not depend on evaluation order or on how work is distributed over workers.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _words(part) -> int:
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    return int(part) & _MASK64


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    """SeedSequence keyed by (seed, *path); path parts may be ints or strings."""
    return np.random.SeedSequence([int(seed) & _MASK64] + [_words(p) for p in path])


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for the given address."""
    return np.random.default_rng(seed_sequence(seed, *path))


def subseed(seed: int, *path) -> int:
    """64-bit child seed for the given address."""
    return int(seed_sequence(seed, *path).generate_state(1, np.uint64)[0])
