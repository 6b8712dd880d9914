"""Counter-based random streams addressed by ``(master_seed, key...)``.

Every replicate draws from its own Philox generator seeded through
``SeedSequence(master_seed, spawn_key=key)``, so a replicate's numbers do
not depend on which worker runs it or in which order.
"""

from __future__ import annotations

import numpy as np

# leading spawn-key component, one per kind of Monte Carlo task
STREAM_AREA = 0
STREAM_DIFFOPS = 1
STREAM_BOOTSTRAP = 2
STREAM_CAPS = 3

SEED_BITS = 64


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**SEED_BITS:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the substream ``key`` of ``master_seed``."""
    seq = np.random.SeedSequence(check_seed(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def replicate_stream(master_seed: int, experiment: int, replicate: int, kind: int = STREAM_AREA) -> np.random.Generator:
    """Generator for replicate ``replicate`` of experiment ``experiment``."""
    return stream(master_seed, kind, experiment, replicate)
