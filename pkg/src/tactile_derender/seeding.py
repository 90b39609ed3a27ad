"""Deterministic seed derivation.

All stochastic stages derive child seeds from a master seed through
SeedSequence hashing, so independent streams never collide and any stage can
be reproduced in isolation without replaying the stages before it.
"""

import numpy as np


def derive_seed(*parts) -> int:
    """Collapse an integer path (master, stream, index, ...) to one seed."""
    seq = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(seq.generate_state(2, np.uint64)[0])


def rng_for(*parts) -> np.random.Generator:
    """Fresh generator for the stream identified by the integer path."""
    return np.random.default_rng(
        np.random.SeedSequence(tuple(int(p) for p in parts)))
