"""Counter-based random streams.

Every random number is a pure function of (master seed, trajectory index,
counter): the trajectory key is a SplitMix64 hash of the seed and index, and
draw ``c`` of that trajectory is the SplitMix64 finalizer applied to
``key + c * golden``. No generator state is carried between steps, so any
trajectory (or any step of it) can be regenerated in isolation and the
results cannot depend on how work is scheduled across threads.

The integer code is written once and runs both under numba and as numpy
ufunc arithmetic on uint64 arrays.
"""

import numpy as np

from .._accel import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
TWO_M53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * np.pi

# draws 4*step .. 4*step+3 drive step ``step``; initial positions use a far-away block
NORMALS_PER_STEP = 4
INITIAL_COUNTER = np.uint64(1 << 62)


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(inline="always")
def uniform(key, counter):
    """Uniform double in [0, 1) with 53 random bits."""
    return (mix64(key + counter * GOLDEN) >> S11) * TWO_M53


@njit(inline="always")
def step_normals(key, step):
    """Three standard normals for one integration step (Box-Muller on four draws)."""
    c = np.uint64(step) * np.uint64(NORMALS_PER_STEP)
    u1 = 1.0 - uniform(key, c)
    u2 = uniform(key, c + np.uint64(1))
    u3 = 1.0 - uniform(key, c + np.uint64(2))
    u4 = uniform(key, c + np.uint64(3))
    r1 = np.sqrt(-2.0 * np.log(u1))
    r2 = np.sqrt(-2.0 * np.log(u3))
    return r1 * np.cos(TWO_PI * u2), r1 * np.sin(TWO_PI * u2), r2 * np.cos(TWO_PI * u4)


def trajectory_keys(master_seed: int, indices) -> np.ndarray:
    """Per-trajectory stream keys for a 64-bit master seed."""
    seed = np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF)
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(seed ^ mix64(idx + GOLDEN))


def uniforms(keys, counters) -> np.ndarray:
    """Uniform draws for arrays of keys and counters (numpy path)."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return uniform(keys, counters)


def step_normals_array(keys, step: int):
    """numpy twin of :func:`step_normals` for an array of keys."""
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return step_normals(keys, np.uint64(step))


def initial_uniforms(master_seed: int, indices) -> np.ndarray:
    """Three uniforms per trajectory for initial-position sampling, shape (n, 3)."""
    keys = trajectory_keys(master_seed, indices)
    out = np.empty((keys.size, 3))
    for j in range(3):
        out[:, j] = uniforms(keys, INITIAL_COUNTER + np.uint64(j))
    return out
