"""Deterministic random stream derivation.

Nothing in this package reads ambient RNG state.  Every randomized routine
takes either explicit uniform deviates or a ``numpy.random.Generator``.
Generators are derived here from ``(seed, purpose tag, replica index)`` so
distinct pipeline stages and parallel replicas never share a stream and
every run is replayable from its recorded seed.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, tag: str, replica: int = 0) -> np.random.Generator:
    """Return the generator for one purpose-tagged stream of a root seed.

    Args:
        seed: root seed of the run (any int; reduced modulo 2**64).
        tag: short ASCII label of the consuming stage, e.g. ``"rows"``.
        replica: index separating otherwise identical parallel consumers.

    Returns:
        A ``numpy.random.Generator`` seeded deterministically from the
        triple.  Equal triples always yield bitwise-identical streams.
    """
    if replica < 0:
        raise ValueError("replica index must be nonnegative")
    key = zlib.crc32(tag.encode("utf-8"))
    seq = np.random.SeedSequence(entropy=int(seed) & _MASK64,
                                 spawn_key=(key, replica))
    return np.random.default_rng(seq)
