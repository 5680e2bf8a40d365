"""Deterministic seed derivation.

Every run takes one root seed; components (split, init, shuffle, ...) get
named sub-seeds so changing one stage's randomness never perturbs another.
Derivation is hash-based so it is stable across platforms and Python runs.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, name: str) -> int:
    """Derive a child seed from a root seed and a component name."""
    digest = hashlib.sha256(f"{seed}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, name: str) -> np.random.Generator:
    """A PCG64 generator keyed by (seed, component name)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, name)))
