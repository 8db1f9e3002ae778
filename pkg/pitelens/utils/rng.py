"""
Deterministic random streams.

Every random draw in a run comes from a stream derived from the master seed and
a key path such as (scenario id, replication index, purpose tag). Streams do
not depend on execution order, so results are identical for any worker count.
"""

import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def tag_to_int(tag: str) -> int:
    """Map a string tag to a stable 64-bit integer (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed_sequence(master_seed: int, *keys: Key) -> np.random.SeedSequence:
    """
    Build the SeedSequence for a key path.

    Args:
        master_seed: Run-level 64-bit seed
        *keys: Integers are used as-is, strings are hashed with tag_to_int

    Returns:
        SeedSequence whose spawn key encodes the key path
    """
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative, got {master_seed}")
    spawn_key = tuple(k if isinstance(k, int) else tag_to_int(str(k)) for k in keys)
    return np.random.SeedSequence(entropy=master_seed, spawn_key=spawn_key)


def derive_rng(master_seed: int, *keys: Key) -> np.random.Generator:
    """Return an independent Generator for a key path."""
    return np.random.default_rng(derive_seed_sequence(master_seed, *keys))


def draw_seed(rng: np.random.Generator) -> int:
    """Draw a 31-bit integer seed for components that take an int random_state."""
    return int(rng.integers(0, 2**31 - 1))
