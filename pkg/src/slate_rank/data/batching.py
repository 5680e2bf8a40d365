"""Deterministic minibatch iteration."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from ..seeds import rng_for


def batch_iter(n: int, batch_size: int, shuffle: bool = False,
               seed: int = 0, epoch: int = 0):
    """Yield index arrays covering range(n) in batches of batch_size.

    The final batch may be short (10 samples at batch size 4 give
    batches of 4, 4 and 2).  With shuffle the permutation is a pure
    function of (seed, epoch), so epoch 0 of two runs with one seed
    orders identically while successive epochs differ.
    """
    if batch_size < 1:
        raise UsageError(f"batch_size must be >= 1, got {batch_size}")
    if n < 0:
        raise UsageError(f"n must be >= 0, got {n}")
    order = np.arange(n)
    if shuffle:
        rng = rng_for(seed, f"batch-epoch-{epoch}")
        rng.shuffle(order)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]
