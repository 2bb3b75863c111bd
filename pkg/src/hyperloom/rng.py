"""Counter-based random number generation with named substreams.

A single 64-bit seed drives every stochastic component. Independent
substreams are derived from (seed, stream id) pairs using the Philox
counter-based generator, so results do not depend on thread count or
on the order in which strata are processed.

Stream-id conventions used across the package:
  - sampling: stream k for the size-k control stratum, K + k for test controls
  - simulator: stream k per stratum, with fixed offsets for the density,
    count, placement and MH phases
  - estimator: stream = run index for multi-start fits
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, stream: int = 0) -> np.random.Generator:
    """Return an independent generator for the given (seed, stream) pair."""
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
