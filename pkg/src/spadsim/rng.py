"""Counter-based random number generation for reproducible pixel streams.

Every (seed, frame, pixel) triple owns an independent splitmix64 stream whose
initial state is derived by hashing the triple with a 64-bit finalizer.  No
generator state is ever shared or advanced across pixels, so results do not
depend on pixel visitation order or thread count.

All jitted primitives carry explicit uint64 signatures.  Numba boxes uint64
returns as Python ints, and without a pinned signature a small int fed back
in would silently compile a second int64 specialization whose shifts
sign-extend; the explicit signatures force every call onto the one correct
path.  PixelStream re-wraps returned states as np.uint64 for the same reason.
"""

import numpy as np
from numba import njit

U64 = np.uint64

# splitmix64 increment and output-mixing multipliers.
_GAMMA = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)

# 64-bit finalizer multipliers (murmur3 variant), used for state derivation.
_F1 = U64(0xFF51AFD7ED558CCD)
_F2 = U64(0xC4CEB9FE1A85EC53)

_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@njit("uint64(uint64)", cache=True)
def mix64(z):
    """Bijective 64-bit finalizer; decorrelates structured integer inputs."""
    z = (z ^ (z >> U64(33))) * _F1
    z = (z ^ (z >> U64(33))) * _F2
    return z ^ (z >> U64(33))


@njit("uint64(uint64, uint64, uint64)", cache=True)
def derive_state(seed, frame, pixel):
    """Initial stream state for one (seed, frame, pixel) triple.

    Chained finalizer applications keep distinct triples statistically
    independent even when seed, frame and pixel are all small integers.
    """
    return mix64(seed ^ mix64(frame ^ mix64(pixel + _GAMMA)))


@njit("UniTuple(uint64, 2)(uint64)", cache=True)
def next_u64(state):
    """Advance one splitmix64 step.  Returns (new_state, output)."""
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return state, z ^ (z >> U64(31))


@njit("Tuple((uint64, float64))(uint64)", cache=True)
def next_open_unit(state):
    """Uniform double in (0, 1]; zero is excluded so log(u) is always finite."""
    state, z = next_u64(state)
    return state, (float(z >> U64(11)) + 1.0) * _INV_2_53


@njit("Tuple((uint64, float64))(uint64)", cache=True)
def next_half_open_unit(state):
    """Uniform double in [0, 1)."""
    state, z = next_u64(state)
    return state, float(z >> U64(11)) * _INV_2_53


@njit("Tuple((uint64, float64, float64))(uint64)", cache=True)
def next_gaussian_pair(state):
    """Two independent standard normals via the Box-Muller transform."""
    state, u1 = next_open_unit(state)
    state, u2 = next_half_open_unit(state)
    r = np.sqrt(-2.0 * np.log(u1))
    a = 2.0 * np.pi * u2
    return state, r * np.cos(a), r * np.sin(a)


class PixelStream:
    """Mutable handle on one derived stream; state is always an np.uint64."""

    __slots__ = ("state",)

    def __init__(self, seed, frame=0, pixel=0):
        self.state = derive_state(U64(seed), U64(frame), U64(pixel))

    def __setattr__(self, name, value):
        # keep the state a uint64 scalar; jitted returns box to Python int
        object.__setattr__(self, name, U64(value))

    def next_u64(self):
        self.state, z = next_u64(self.state)
        return int(z)

    def next_open_unit(self):
        self.state, u = next_open_unit(self.state)
        return u

    def next_gaussian(self):
        self.state, g, _ = next_gaussian_pair(self.state)
        return g
