"""Per-driver random streams.

Every driver draws from its own generator keyed by (global_seed, driver_id,
stream), so results do not depend on batch order or worker count.
"""
import numpy as np

STREAM_SYNTHETIC = 1
STREAM_CHARGING = 2

_U64 = 2 ** 64


def driver_seed_sequence(global_seed: int, driver_id: int, stream: int) -> np.random.SeedSequence:
    if driver_id < 0:
        raise ValueError("driver_id must be non-negative")
    return np.random.SeedSequence([global_seed % _U64, driver_id, stream])


def driver_rng(global_seed: int, driver_id: int, stream: int = STREAM_CHARGING) -> np.random.Generator:
    return np.random.default_rng(driver_seed_sequence(global_seed, driver_id, stream))
