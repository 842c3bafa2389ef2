"""Seeded random streams for populations, signals, doors and switching draws"""

import hashlib
import logging

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

# Stream identifiers; a (seed, stream, *keys) triple names one generator.
POPULATION = 1
SWITCHING = 2
DOORS = 3
SIGNAL = 4
ORACLE = 5


def truncated_normal(rng: np.random.Generator, mean: float, std: float, size,
                     low: float = 0.0, high: float = np.inf) -> np.ndarray:
    """Normal(mean, std) restricted to [low, high]; bounds may be arrays"""
    if std == 0:
        return np.clip(np.full(size, float(mean)), low, high)
    a = (np.asarray(low, dtype=float) - mean) / std
    b = (np.asarray(high, dtype=float) - mean) / std
    return stats.truncnorm.rvs(a, b, loc=mean, scale=std, size=size, random_state=rng)


def derive_seed(seed: int, branch) -> int:
    """Child seed from a parent seed and a branch label (ensembles, sweeps)"""
    combined = f"{seed}:{branch}"
    return int(hashlib.sha256(combined.encode()).digest()[:4].hex(), 16)


class SeedManager:
    """
    All randomness in a run flows through this object.

    Generators are addressed by key, never by call order, so the same
    (seed, stream, keys) always yields the same numbers regardless of how
    many threads consume them or in which order they are requested.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._base_seed = int(seed)

    @property
    def base_seed(self) -> int:
        return self._base_seed

    def stream(self, stream: int, *keys: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self._base_seed, spawn_key=(stream, *[int(k) for k in keys]))
        return np.random.Generator(np.random.PCG64(sequence))

    def population(self) -> np.random.Generator:
        return self.stream(POPULATION)

    def switching(self, step: int) -> np.random.Generator:
        return self.stream(SWITCHING, step)

    def doors(self, day: int, device_id: int) -> np.random.Generator:
        return self.stream(DOORS, day, device_id)

    def signal(self) -> np.random.Generator:
        return self.stream(SIGNAL)

    def oracle(self, label: int = 0) -> np.random.Generator:
        return self.stream(ORACLE, label)

    def fork(self, branch_id) -> "SeedManager":
        """Child manager for an ensemble member or sweep point"""
        return SeedManager(seed=derive_seed(self._base_seed, branch_id))
