"""Counter-based random streams.

Every stream is a Philox generator keyed by ``SeedSequence((seed, *path))``
so a trajectory, chunk or sample owns its randomness regardless of the
order (or thread) in which it is produced.
"""

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the node ``path`` under ``seed``."""
    entropy = (int(seed), *(int(p) for p in path))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
