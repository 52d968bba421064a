"""numba-compiled kernels.

Signatures and results mirror :mod:`smpfpt._np` exactly; the backend switch
in :mod:`smpfpt._backend` picks one of the two modules at import time.
"""

import functools

import numba as nb
import numpy as np

from smpfpt._rng import (
    DETERMINISTIC,
    EXPONENTIAL,
    GAMMA,
    GOLDEN,
    LOGNORMAL,
    TWO_M53,
    UNIFORM,
    mix64,
)

njit = functools.partial(nb.njit, cache=True, nogil=True)

_mix64 = njit(mix64)
_S11 = np.uint64(11)
_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------- linear algebra

@njit
def lu_factor(a, tol):
    n = a.shape[0]
    lu = a.copy()
    piv = np.arange(n)
    for k in range(n):
        p = k
        best = abs(lu[k, k])
        for i in range(k + 1, n):
            if abs(lu[i, k]) > best:
                best = abs(lu[i, k])
                p = i
        if best == 0.0 or best < tol:
            return lu, piv, k, best
        if p != k:
            for c in range(n):
                tmp = lu[k, c]
                lu[k, c] = lu[p, c]
                lu[p, c] = tmp
            t = piv[k]
            piv[k] = piv[p]
            piv[p] = t
        d = lu[k, k]
        for i in range(k + 1, n):
            f = lu[i, k] / d
            lu[i, k] = f
            if f != 0.0:
                for c in range(k + 1, n):
                    lu[i, c] -= f * lu[k, c]
    return lu, piv, -1, 0.0


@njit
def lu_solve(lu, piv, b):
    n = lu.shape[0]
    x = np.empty(n)
    for i in range(n):
        x[i] = b[piv[i]]
    for i in range(n):
        s = x[i]
        for k in range(i):
            s -= lu[i, k] * x[k]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= lu[i, k] * x[k]
        x[i] = s / lu[i, i]
    return x


@njit
def power_radius(a, shift, max_iter, tol):
    n = a.shape[0]
    b = a.copy()
    for i in range(n):
        b[i, i] += shift
    x = np.full(n, 1.0 / n)
    y = np.full(n, 1.0 / n)
    prev = np.inf
    for it in range(max_iter):
        x = b @ x
        x /= x.sum()
        y = b.T @ y
        y /= y.sum()
        bx = b @ x
        yx = y @ x
        if yx > 0.0:
            lam = (y @ bx) / yx
        else:
            lam = bx.sum()
        if abs(lam - prev) < tol:
            return lam - shift, it + 1
        prev = lam
    return np.nan, -1


# ---------------------------------------------------------------- random streams

@njit
def _draw(key, ctr):
    z = _mix64(key + np.uint64(ctr + 1) * GOLDEN)
    return (np.float64(z >> _S11) + 0.5) * TWO_M53, ctr + 1


@njit
def _normal(key, ctr):
    u1, ctr = _draw(key, ctr)
    u2, ctr = _draw(key, ctr)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2), ctr


@njit
def _gamma(k, theta, key, ctr):
    boost = 1.0
    if k < 1.0:
        u, ctr = _draw(key, ctr)
        boost = u ** (1.0 / k)
        k = k + 1.0
    d = k - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        z, ctr = _normal(key, ctr)
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u, ctr = _draw(key, ctr)
        if np.log(u) < 0.5 * z * z + d - d * v + d * np.log(v):
            return d * v * theta * boost, ctr


@njit
def _sojourn(code, a, b, key, ctr):
    if code == DETERMINISTIC:
        return a, ctr
    if code == EXPONENTIAL:
        u, ctr = _draw(key, ctr)
        return -np.log(u) / a, ctr
    if code == UNIFORM:
        u, ctr = _draw(key, ctr)
        return a + (b - a) * u, ctr
    if code == GAMMA:
        return _gamma(a, b, key, ctr)
    if code == LOGNORMAL:
        z, ctr = _normal(key, ctr)
        return np.exp(a + b * z), ctr
    return np.nan, ctr


@njit
def _pick(cum, cur, u):
    m = cum.shape[1]
    for k in range(m):
        if u < cum[cur, k]:
            return k
    return m - 1


# ---------------------------------------------------------------- simulation

@njit
def passage_times(cum, code, pa, pb, start, target, seed, rep0, n, max_steps):
    times = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    censored = np.zeros(n, dtype=np.bool_)
    base = _mix64(seed)
    for r in range(n):
        key = _mix64(base + np.uint64(rep0 + r) * GOLDEN)
        ctr = 0
        cur = start
        t = 0.0
        k = 0
        while True:
            u, ctr = _draw(key, ctr)
            nxt = _pick(cum, cur, u)
            x, ctr = _sojourn(code[cur, nxt], pa[cur, nxt], pb[cur, nxt], key, ctr)
            t += x
            k += 1
            cur = nxt
            if cur == target:
                break
            if k >= max_steps:
                censored[r] = True
                break
        times[r] = t
        steps[r] = k
    return times, steps, censored


@njit
def _grow(rep, src, dst, soj):
    n = rep.shape[0] * 2
    rep2 = np.empty(n, dtype=np.int64)
    src2 = np.empty(n, dtype=np.int64)
    dst2 = np.empty(n, dtype=np.int64)
    soj2 = np.empty(n)
    rep2[: rep.shape[0]] = rep
    src2[: src.shape[0]] = src
    dst2[: dst.shape[0]] = dst
    soj2[: soj.shape[0]] = soj
    return rep2, src2, dst2, soj2


@njit
def _trace_one(cum, code, pa, pb, cur, absorbing, stop_absorbing, key, rid, ctr, max_steps,
               room, rep, src, dst, soj, total):
    """Append one replication's records; return the new total, or -1 if ``room`` ran out."""
    for _ in range(max_steps):
        if total >= room:
            return -1
        u, ctr = _draw(key, ctr)
        nxt = _pick(cum, cur, u)
        x, ctr = _sojourn(code[cur, nxt], pa[cur, nxt], pb[cur, nxt], key, ctr)
        rep[total] = rid
        src[total] = cur
        dst[total] = nxt
        soj[total] = x
        total += 1
        if stop_absorbing and absorbing[cur] and nxt == cur:
            break
        cur = nxt
    return total


@njit
def trace_records(cum, code, pa, pb, starts, absorbing, stop_absorbing, seed,
                  rep_ids, ctr0, max_steps, cap):
    # A replication that overflows the buffers is replayed from its stream
    # after growing them, which keeps buffer reallocation out of the hot loop.
    size = 1024
    rep = np.empty(size, dtype=np.int64)
    src = np.empty(size, dtype=np.int64)
    dst = np.empty(size, dtype=np.int64)
    soj = np.empty(size)
    total = 0
    base = _mix64(seed)
    r = 0
    while r < starts.shape[0] and total < cap:
        cur = starts[r]
        if stop_absorbing and absorbing[cur]:
            r += 1
            continue
        key = _mix64(base + np.uint64(rep_ids[r]) * GOLDEN)
        room = min(size, cap)
        t = _trace_one(cum, code, pa, pb, cur, absorbing, stop_absorbing, key, rep_ids[r],
                       ctr0, max_steps, room, rep, src, dst, soj, total)
        if t < 0:
            if size >= cap:
                total = room
                break
            rep, src, dst, soj = _grow(rep, src, dst, soj)
            size = rep.shape[0]
            continue
        total = t
        r += 1
    return rep[:total].copy(), src[:total].copy(), dst[:total].copy(), soj[:total].copy()
