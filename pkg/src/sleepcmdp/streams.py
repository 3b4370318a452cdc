"""Counter-addressed random streams.

Every (seed, replication, purpose, policy) key owns one Philox stream. The
disturbances of iteration ``n`` for horizon ``H`` are the draws at positions
``(n - 1) * H .. n * H - 1`` of that stream, so any iteration can be reached
directly by advancing the counter. Runs of different lengths therefore share
their common prefix, and evaluation order does not matter.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

COST = 1
VALUE = 2
PURPOSES = {"cost": COST, "value": VALUE}

# Philox4x64 emits four 64-bit words per counter increment; one double per word
_WORDS_PER_COUNTER = 4


def stream_key(seed: int, replication: int, purpose: int, policy: int) -> tuple[int, int, int, int]:
    return (int(seed), int(replication), int(purpose), int(policy))


def _generator(key, position: int) -> Generator:
    bitgen = Philox(SeedSequence(list(key)))
    bitgen.advance(position // _WORDS_PER_COUNTER)
    gen = Generator(bitgen)
    skip = position % _WORDS_PER_COUNTER
    if skip:
        gen.random(skip)
    return gen


def iteration_stream(seed, replication, purpose, policy, iteration: int, horizon: int) -> Generator:
    """Generator positioned at the first disturbance of ``iteration`` (1-based)."""
    if iteration < 1:
        raise ValueError("iteration is 1-based")
    key = stream_key(seed, replication, purpose, policy)
    return _generator(key, (iteration - 1) * horizon)


def uniform_block(seed, replication, purpose, policy, first_iteration: int, count: int, horizon: int) -> np.ndarray:
    """Disturbances for ``count`` consecutive iterations, shape ``(count, horizon)``."""
    gen = iteration_stream(seed, replication, purpose, policy, first_iteration, horizon)
    return gen.random((count, horizon))
