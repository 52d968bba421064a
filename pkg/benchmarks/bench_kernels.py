"""Time the numba kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py [--reps N] [--repeat K]``.
Both backends are imported directly, so the environment flag is not needed.
JIT compilation is excluded by a warm-up call per kernel.
"""

import argparse
import time

import numpy as np

from smpfpt import _jit, _np, _rng
from smpfpt.model import SmpModel, SojournDist
from smpfpt.sim import _tables


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _example_model():
    exp = SojournDist.exponential
    p = np.array([[0.0, 1.0, 0.0], [0.8, 0.0, 0.2], [0.0, 0.0, 1.0]])
    dists = [[None, exp(1 / 6), None],
             [exp(1 / 0.7), None, exp(1 / 1.1)],
             [None, None, SojournDist.deterministic(0.0)]]
    return SmpModel(p, distributions=dists)


def _random_model(rng, m):
    w = rng.exponential(size=(m, m)) * (rng.random((m, m)) < 0.6)
    w[np.arange(m), rng.integers(m, size=m)] += 0.1
    p = w / w.sum(axis=1, keepdims=True)
    fams = [SojournDist.gamma(1.7, 0.6), SojournDist.lognormal(0.0, 0.4),
            SojournDist.uniform(0.2, 1.5), SojournDist.exponential(2.0)]
    dists = [[fams[(i + j) % 4] if p[i, j] > 0 else None for j in range(m)] for i in range(m)]
    return SmpModel(p, distributions=dists)


def cases(reps):
    rng = np.random.default_rng(0)
    a50 = rng.normal(size=(50, 50)) + 50 * np.eye(50)
    b50 = rng.normal(size=50)
    w = rng.random((8, 8))
    w[:, 0] = 0.0
    w /= w.sum(axis=1, keepdims=True).max() * 1.01

    ex = _tables(_example_model())
    rnd = _tables(_random_model(rng, 6))
    starts = np.zeros(reps, dtype=np.int64)
    absorbing = np.array([False, False, True])
    ids = np.arange(reps, dtype=np.int64)
    seed = _rng.as_seed(1)

    def lu(k):
        lu_, piv, _, _ = k.lu_factor(a50, 1e-12)
        return k.lu_solve(lu_, piv, b50)

    return {
        "lu 50x50 factor+solve": lu,
        "power iteration 8x8": lambda k: k.power_radius(w, 1e-3, 100_000, 1e-12),
        f"passage times, example, {reps} reps": lambda k: k.passage_times(
            *ex, 0, 2, seed, 0, reps, 1_000_000),
        f"passage times, 6-state mixed, {reps} reps": lambda k: k.passage_times(
            *rnd, 0, 3, seed, 0, reps, 1_000_000),
        f"trace, example, {reps} reps": lambda k: k.trace_records(
            *ex, starts, absorbing, True, seed, ids, 0, 1_000_000, np.iinfo(np.int64).max),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'kernel':<40} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name, fn in cases(args.reps).items():
        t_jit = _best(lambda: fn(_jit), args.repeat)
        t_np = _best(lambda: fn(_np), args.repeat)
        print(f"{name:<40} {t_jit * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms {t_np / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
