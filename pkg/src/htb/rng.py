"""Per-path random streams.

Path ``i`` of a run seeded with ``master_seed`` draws from a Philox generator
whose 128-bit key is ``(i << 64) | master_seed``.  A path's draws are
therefore independent of how many paths are simulated, of block sizes and
of worker counts.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_U64 = (1 << 64) - 1


def check_seed(master_seed: int) -> int:
    if isinstance(master_seed, bool) or not isinstance(master_seed, (int, np.integer)) \
            or not 0 <= int(master_seed) <= _U64:
        raise InvalidInputError(f"seed={master_seed!r} violates 0 <= seed < 2**64")
    return int(master_seed)


def path_key(master_seed: int, index: int) -> int:
    if not 0 <= index <= _U64:
        raise InvalidInputError(f"path index {index} out of range")
    return (int(index) << 64) | check_seed(master_seed)


def path_generator(master_seed: int, index: int) -> np.random.Generator:
    """Fresh generator for one path; reference form of :class:`PathStreams`."""
    return np.random.Generator(np.random.Philox(key=path_key(master_seed, index)))


class PathStreams:
    """Reuses one Philox instance, re-keying it per path.

    Constructing a generator per path costs roughly as much as the draws
    themselves; resetting the state of a single bit generator is cheaper and
    yields exactly the same streams as :func:`path_generator`.
    """

    def __init__(self, master_seed: int):
        self.master_seed = check_seed(master_seed)
        self._bitgen = np.random.Philox(key=0)
        self.generator = np.random.Generator(self._bitgen)

    def reset(self, index: int) -> np.random.Generator:
        if not 0 <= index <= _U64:
            raise InvalidInputError(f"path index {index} out of range")
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.zeros(4, dtype=np.uint64),
                "key": np.array([self.master_seed, index], dtype=np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self.generator
