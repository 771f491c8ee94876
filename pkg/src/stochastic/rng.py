"""
Counter-based random streams

Every stream is a Philox generator keyed by (master_seed, tag, block, chunk, slab)
through SeedSequence spawn keys, so draws never depend on worker scheduling.
Paths are grouped in chunks of CHUNK_SIZE; the chunk size is part of the scheme.
"""
from typing import Iterator, Tuple

import numpy as np

CHUNK_SIZE = 4096
STREAM_SCHEME = f"philox/seedsequence(master_seed, tag, block, chunk, slab), chunk={CHUNK_SIZE}"

# stream tags
SUBORDINATOR = 1
GAUSSIAN = 2
JUMPS = 3


def stream(master_seed: int, tag: int, block: int, chunk: int, slab: int) -> np.random.Generator:
    """Independent generator for one (tag, block, chunk, slab) cell"""
    seq = np.random.SeedSequence(entropy=int(master_seed) & (2 ** 64 - 1),
                                 spawn_key=(int(tag), int(block), int(chunk), int(slab)))
    return np.random.Generator(np.random.Philox(seq))


def chunks(n_paths: int) -> Iterator[Tuple[int, int, int]]:
    """(chunk index, first path, stop) covering range(n_paths)"""
    for index, start in enumerate(range(0, n_paths, CHUNK_SIZE)):
        yield index, start, min(start + CHUNK_SIZE, n_paths)
