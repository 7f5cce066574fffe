"""Counter-based random substreams.

Every random draw in a simulation comes from a Philox generator addressed by
(seed, stream id, index). Two runs that ask for the same address get the same
numbers, whatever else they did before, so the full and random-batch dynamics
can replay one noise path and worker processes never share state.
"""

import hashlib

import numpy as np

STREAM_NOISE = 0
STREAM_BATCH = 1
STREAM_INITIAL = 2
STREAM_VELOCITY = 3

_WORD = 1 << 64


def substream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Return the generator owning block `index` of `stream` under `seed`.

    The key packs (stream, seed); the block index sits in the third counter
    word, so draws inside one block (which only advance the low words) never
    reach the next block.
    """
    if seed < 0 or seed >= _WORD:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    if stream < 0 or stream >= _WORD:
        raise ValueError(f"stream id must be in [0, 2**64), got {stream}")
    if index < 0:
        raise ValueError(f"block index must be nonnegative, got {index}")
    key = (stream << 64) | seed
    counter = index << 128
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def stream_checksum(values: np.ndarray) -> str:
    """Short hex digest of an array's bytes, used to compare noise blocks."""
    return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()[:16]
