"""Deterministic random substreams built on a counter-based generator.

Every random draw in a run comes from a Philox stream keyed by
``(seed, epoch, channel)``.  Within a stream, vectorized draws hand each
particle a fixed block of the counter space (row k of a ``(N, d)`` draw),
so results are bit-identical no matter how the per-particle loop is
scheduled or parallelized.
"""

import numpy as np
from numpy.random import Generator, Philox

# Channel ids; one stream per (seed, epoch, channel).
CHANNEL_INIT = 0
CHANNEL_NOISE = 1
CHANNEL_BIRTH_DEATH = 2
CHANNEL_WEIGHTS = 3

_CHANNEL_BITS = 8


def substream(seed: int, epoch: int, channel: int) -> Generator:
    """Return the dedicated generator for one (seed, epoch, channel) triple."""
    if not 0 <= channel < (1 << _CHANNEL_BITS):
        raise ValueError(f"channel id out of range: {channel}")
    key = np.array(
        [np.uint64(seed), (np.uint64(epoch) << np.uint64(_CHANNEL_BITS)) | np.uint64(channel)],
        dtype=np.uint64,
    )
    return Generator(Philox(key=key))
