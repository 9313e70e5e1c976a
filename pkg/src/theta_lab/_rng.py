import os

import numpy as np

SEED_ENV = "THETA_LAB_SEED"


def base_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def counter_rng(stream: int = 0, seed: int | None = None) -> np.random.Generator:
    """Counter-based generator; the same (seed, stream) always yields the same draws."""
    key = base_seed() if seed is None else seed
    return np.random.Generator(np.random.Philox(key=[key, stream]))


def sample_complex(n: int, scale: float = 1.0, stream: int = 0) -> np.ndarray:
    rng = counter_rng(stream)
    return scale * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n))
