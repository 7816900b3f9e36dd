"""Seed lineage for reproducible, order-independent random draws.

Every random quantity in a Monte-Carlo run comes from its own generator keyed by
``(trial, stream, *extra)`` under a master seed. Results therefore do not depend on
worker scheduling, and the same trial sees the same sources, noise and combiner
phases when only the SNR or the array size changes.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    TRAJECTORY = 0
    SOURCES = 1
    NOISE = 2
    COMBINER = 3
    SFA_NOISE = 4
    UPA_NOISE = 5
    MEASUREMENT = 6


def generator(master_seed: int, trial: int, stream: Stream, *extra: int) -> np.random.Generator:
    key = (int(trial), int(stream)) + tuple(int(e) for e in extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=key)))
