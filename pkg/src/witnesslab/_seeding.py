"""Seed plumbing shared by splitting, permutations and the benchmark harness."""

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state):
    """One splitmix64 step. Returns ``(next_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seeds(seed, count):
    """Expand ``seed`` into ``count`` independent 64-bit child seeds."""
    state = int(seed) & _MASK
    out = []
    for _ in range(count):
        state, z = splitmix64(state)
        out.append(z)
    return out


def child_seed(seed, index):
    """The ``index``-th child of ``seed`` without materialising the prefix."""
    state = (int(seed) + index * 0x9E3779B97F4A7C15) & _MASK
    return splitmix64(state)[1]


def make_rng(seed):
    # Philox is counter-based: the same seed yields the same stream everywhere.
    return np.random.Generator(np.random.Philox(int(seed) & _MASK))
