"""Counter-based random streams.

Each draw site asks for a generator keyed by ``(seed, purpose, *counters)``
so the values it receives never depend on what else was drawn before.
"""
from __future__ import annotations

import numpy as np

MOBILITY_INIT = 1
MOBILITY_STEP = 2
PLACEMENT = 3
SHADOWING = 4
FADING = 5
TN_LAYOUT = 6
TN_SHADOWING = 7
SENSING_NOISE = 8


def stream(seed: int, purpose: int, *counters: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, counters)))
    return np.random.Generator(np.random.Philox(ss))
