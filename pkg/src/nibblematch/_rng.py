"""Named, splittable random streams.

Every consumer derives its generator from the run seed plus an integer key
path, so streams are independent and reproducible without sharing state.
"""

import numpy as np

RELABEL = 1
REGULAR = 2
EMBED = 3
STAGE_EDGES = 10
STAGE_WASTE = 11
STAT_SAMPLE = 12
MONTE_CARLO = 20
COLOR_SPLIT = 30
THIN = 31
REGULARIZE = 32
ISOLATE = 33
PIPELINE = 40


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
