"""Counter-based deterministic random numbers.

Every draw is a pure function of (seed, stream, step, salt): replicas get
disjoint streams, never share state, and a trajectory is reproducible from its
key alone no matter how the work is chunked or threaded. The generator is the
splitmix64 finalizer applied twice over the combined key words.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_C_SEED = np.uint64(0x6A09E667F3BCC909)
_C_STREAM = np.uint64(0x9E3779B97F4A7C15)
_C_STEP = np.uint64(0xD1B54A32D192ED03)
_C_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@numba.njit(numba.uint64(numba.uint64), cache=True, nogil=True)
def _mix64(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> np.uint64(31))


@numba.njit(numba.uint64(numba.uint64, numba.uint64), cache=True, nogil=True)
def make_key(seed, stream):
    return _mix64((_mix64(seed ^ _C_SEED) + stream * _C_STREAM) & _MASK)


@numba.njit(numba.float64(numba.uint64, numba.uint64, numba.uint64), cache=True, nogil=True)
def uniform01(key, step, salt):
    w = _mix64((_mix64(key ^ (step * _C_STEP)) + salt * _C_SALT) & _MASK)
    return float(w >> np.uint64(11)) * _INV_2_53


def _mix64_py(z: int) -> int:
    # pure-python reference for the jitted mixer, used only in tests
    mask = (1 << 64) - 1
    z = (z + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def uniform01_py(seed: int, stream: int, step: int, salt: int) -> float:
    mask = (1 << 64) - 1
    key = _mix64_py((_mix64_py(seed ^ 0x6A09E667F3BCC909) + stream * 0x9E3779B97F4A7C15) & mask)
    w = _mix64_py((_mix64_py(key ^ ((step * 0xD1B54A32D192ED03) & mask)) + salt * 0x8CB92BA72F3D8DD7) & mask)
    return (w >> 11) * _INV_2_53


@dataclass(frozen=True)
class RngSpec:
    """Key of a deterministic random stream: 64-bit seed plus replica index."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if not (0 <= self.stream < 2**64):
            raise ValueError("stream must fit in 64 bits")

    @property
    def key(self) -> np.uint64:
        return np.uint64(make_key(np.uint64(self.seed), np.uint64(self.stream)))

    def uniform(self, step: int, salt: int) -> float:
        return uniform01(self.key, np.uint64(step), np.uint64(salt))
