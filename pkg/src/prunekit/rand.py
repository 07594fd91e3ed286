"""Seeded, stream-splittable random number generation.

All stochastic components draw from counter-based Philox streams keyed by
(seed, domain, index). Streams are independent, so e.g. adding a class to a
synthetic task never perturbs the draws of earlier classes, and the shuffle
stream of a training run never interacts with its init stream.
"""

import numpy as np

# Stable domain codes; never renumber (would silently change all seeded output).
_DOMAINS = {
    "class-mean": 0,
    "class-noise": 1,
    "target-shift": 2,
    "target-noise": 3,
    "model-init": 4,
    "shuffle": 5,
    "split": 6,
    "kmeans": 7,
    "score": 8,
}

_MASK64 = (1 << 64) - 1


def stream(seed: int, domain: str, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for (seed, domain, index)."""
    code = _DOMAINS[domain]
    key = ((seed & _MASK64) << 64) | ((code & 0xFFFFFFFF) << 32) | (index & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))
