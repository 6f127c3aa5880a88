"""Deterministic random streams derived from a single run seed.

Every stochastic draw in a run (job spawns, policy sampling, minibatch
shuffling, weight init) comes from its own named stream so that results do
not depend on the order in which components are constructed.
"""

from __future__ import annotations

import numpy as np

# Stream-id namespaces. First element of the spawn key.
STREAM_ENV_SPAWN = 0
STREAM_UNIT_INIT = 1
STREAM_UNIT_SAMPLE = 2
STREAM_UNIT_UPDATE = 3
STREAM_FUZZ = 4


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return an independent generator for (seed, stream id tuple).

    Identical arguments always produce an identical draw sequence.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(stream)))
    )
