"""Counter-keyed random streams usable from numba-compiled loops.

Each stream is a xoshiro256** generator whose 256-bit state is expanded
with SplitMix64 from the key ``(seed, tag, index)``.  Replicate ``i`` of a
run with master seed ``s`` always gets the same stream no matter how the
replicates are scheduled, which makes ensembles reproducible bit-for-bit
and order independent.
"""

import numpy as np
from numba import njit, uint64

_GOLDEN = 0x9E3779B97F4A7C15
_MIX_INDEX = 0xD1B54A32D192ED03
_MIX_TAG = 0x8CB92BA72F3D8DD7
_TWO53_INV = 1.0 / 9007199254740992.0

# stream tags; one namespace per kind of consumer
TAG_REPLICATE = 0
TAG_POOL = 1
TAG_TOP = 2
TAG_RESAMPLE = 3


@njit(inline="always")
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(inline="always")
def _splitmix(x):
    x = x + uint64(_GOLDEN)
    z = x
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return x, z ^ (z >> uint64(31))


@njit(cache=True)
def seed_into(state, seed, tag, index):
    x = uint64(seed) ^ (uint64(index) * uint64(_MIX_INDEX)) ^ (uint64(tag) * uint64(_MIX_TAG))
    # two warm-up rounds decorrelate neighbouring indices
    x, _ = _splitmix(x)
    x, _ = _splitmix(x)
    for i in range(4):
        x, z = _splitmix(x)
        state[i] = z


@njit(cache=True)
def new_state(seed, tag, index):
    state = np.empty(4, np.uint64)
    seed_into(state, seed, tag, index)
    return state


@njit(inline="always")
def next_u64(s):
    result = _rotl(s[1] * uint64(5), 7) * uint64(9)
    t = s[1] << uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(inline="always")
def uniform(s):
    """Uniform on [0, 1) with 53 random bits."""
    return (next_u64(s) >> uint64(11)) * _TWO53_INV


@njit(inline="always")
def uniform_pos(s):
    """Uniform on (0, 1]; safe inside logarithms and negative powers."""
    return ((next_u64(s) >> uint64(11)) + 1.0) * _TWO53_INV


@njit(inline="always")
def randbelow(s, n):
    return int(uniform(s) * n)


@njit(inline="always")
def exponential(s):
    return -np.log(uniform_pos(s))


@njit(inline="always")
def normal(s):
    # Box-Muller, one variate per call; the paired variate is discarded
    u1 = uniform_pos(s)
    u2 = uniform(s)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(inline="always")
def random_sign(s):
    return 1.0 if (next_u64(s) >> uint64(63)) else -1.0


class RandomStream:
    """A single keyed stream for the sample-at-a-time API.

    ``RandomStream(seed, index)`` yields exactly the stream that replicate
    ``index`` of an ensemble with master seed ``seed`` consumes.
    """

    __slots__ = ("seed", "tag", "index", "state")

    def __init__(self, seed=0, index=0, tag=TAG_REPLICATE):
        self.seed = int(seed)
        self.tag = int(tag)
        self.index = int(index)
        self.state = new_state(self.seed, self.tag, self.index)

    def random(self):
        return _py_uniform(self.state)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, index={self.index}, tag={self.tag})"


@njit(cache=True)
def _py_uniform(state):
    return uniform(state)


def as_stream(rng):
    """Coerce ``None``/int/RandomStream into a RandomStream."""
    if isinstance(rng, RandomStream):
        return rng
    if rng is None:
        return RandomStream(np.random.SeedSequence().entropy % (1 << 63))
    return RandomStream(int(rng))
