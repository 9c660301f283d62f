"""Counter-based random streams for reproducible Monte Carlo.

Trials are grouped into fixed blocks of ``BLOCK_SIZE``.  Trial ``i`` uses row
``i % BLOCK_SIZE`` of the draws made by block ``i // BLOCK_SIZE``, and block
``b`` draws from a Philox generator keyed by
``SeedSequence(master_seed, spawn_key=(stream, b))``.  A block's draws depend
only on (master_seed, stream, b, block length), so results do not depend on
how blocks are distributed over workers.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 8192
MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def block_rng(master_seed: int, block: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(ss))


def trial_blocks(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """(block index, block length) pairs covering ``trials`` trials."""
    if trials < 1:
        raise ValueError("trials must be positive")
    full, rest = divmod(trials, block_size)
    blocks = [(b, block_size) for b in range(full)]
    if rest:
        blocks.append((full, rest))
    return blocks
