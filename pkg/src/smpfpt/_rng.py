"""Counter-based random streams shared by both kernel backends.

Every replication owns a stream keyed by ``(seed, replication id)``; draw
``c`` of that stream is ``splitmix64_finalizer(key + (c + 1) * GOLDEN)``.
Draws therefore do not depend on the order in which replications run, and
the numba and numpy kernels produce the same values.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
TWO_M53 = 2.0 ** -53

# sojourn family codes used inside kernels; 0 marks "no distribution"
NONE, DETERMINISTIC, EXPONENTIAL, UNIFORM, GAMMA, LOGNORMAL = 0, 1, 2, 3, 4, 5

_U64 = (1 << 64) - 1


def mix64(z):
    """SplitMix64 finalizer; works on uint64 scalars and arrays (and under numba)."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def as_seed(seed):
    """Reduce an arbitrary Python int to a uint64 seed."""
    return np.uint64(int(seed) & _U64)


def stream_keys(seed, rep_ids):
    """Vectorized per-replication stream keys (numpy path)."""
    with np.errstate(over="ignore"):
        base = mix64(np.atleast_1d(as_seed(seed)))[0]
        reps = np.asarray(rep_ids, dtype=np.int64).astype(np.uint64)
        return mix64(base + reps * GOLDEN)


def uniforms(keys, ctr):
    """Draw number ``ctr`` from each stream in ``keys``; values lie in (0, 1)."""
    with np.errstate(over="ignore"):
        c = np.asarray(ctr, dtype=np.int64).astype(np.uint64) + np.uint64(1)
        z = mix64(keys + c * GOLDEN)
    return ((z >> _S11).astype(np.float64) + 0.5) * TWO_M53
