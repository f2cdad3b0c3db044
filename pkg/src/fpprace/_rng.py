"""Deterministic seed splitting and per-trial RNG streams.

Trial-level parallelism everywhere in this package follows one contract:
every trial owns an independent stream seeded by ``derive_seed(master_seed,
trial_index)``, so results are byte-identical regardless of worker count or
scheduling.  The derivation is the closed form of the splitmix64 sequence
(trial i gets the i-th splitmix64 output for the master seed), and the
streams themselves are xoshiro256++ generators, implemented here as plain
uint64 arithmetic so numba kernels can inline them.

``randbelow`` maps a 53-bit uniform onto ``[0, bound)`` via
``floor(u * bound)``; the O(2^-53) bias is far below every tolerance used in
this package and keeps the kernels branch-light.
"""

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U64_GOLDEN = np.uint64(_GOLDEN)
_U64_MIX1 = np.uint64(_MIX1)
_U64_MIX2 = np.uint64(_MIX2)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def derive_seed(master_seed: int, trial_index: int) -> int:
    """Seed for trial ``trial_index`` under ``master_seed`` (splitmix64 output)."""
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    z = (int(master_seed) + (trial_index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def coerce_seed(rng) -> int:
    """Turn an int seed or a numpy Generator into a concrete uint64 seed.

    Simulation entry points accept either form; passing a Generator draws one
    64-bit value from it, so repeated calls on the same Generator produce
    distinct (but reproducible) sub-simulations.
    """
    if isinstance(rng, (int, np.integer)):
        return int(rng) & _MASK64
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 1 << 64, dtype=np.uint64))
    raise TypeError("rng must be an integer seed or a numpy.random.Generator")


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def derive_seed_u64(master_seed, trial_index):
    return _mix64(master_seed + (trial_index + np.uint64(1)) * _U64_GOLDEN)


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@njit(cache=True, inline="always")
def xs_init(seed):
    """xoshiro256++ state from a 64-bit seed, via four splitmix64 draws."""
    z = seed
    z += _U64_GOLDEN
    s0 = _mix64(z)
    z += _U64_GOLDEN
    s1 = _mix64(z)
    z += _U64_GOLDEN
    s2 = _mix64(z)
    z += _U64_GOLDEN
    s3 = _mix64(z)
    if s0 | s1 | s2 | s3 == np.uint64(0):
        s0 = _U64_GOLDEN
    return s0, s1, s2, s3


@njit(cache=True, inline="always")
def xs_next(s0, s1, s2, s3):
    """Advance one step; returns (s0, s1, s2, s3, value)."""
    result = _rotl(s0 + s3, np.uint64(23)) + s0
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, np.uint64(45))
    return s0, s1, s2, s3, result


@njit(cache=True, inline="always")
def xs_next_double(s0, s1, s2, s3):
    """Uniform float64 in [0, 1) with 53 random bits."""
    s0, s1, s2, s3, v = xs_next(s0, s1, s2, s3)
    return s0, s1, s2, s3, float(v >> np.uint64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def xs_randbelow(s0, s1, s2, s3, bound):
    """Uniform int64 in [0, bound); bound must be >= 1."""
    s0, s1, s2, s3, u = xs_next_double(s0, s1, s2, s3)
    k = np.int64(u * bound)
    if k >= bound:
        k = bound - np.int64(1)
    return s0, s1, s2, s3, k
