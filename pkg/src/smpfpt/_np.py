"""Pure-numpy kernels, used when numba is unavailable or disabled.

The simulation kernels advance all replications in lockstep instead of
looping over them, but consume each replication's random stream in exactly
the same order as :mod:`smpfpt._jit`.
"""

import numpy as np

from smpfpt._rng import (
    DETERMINISTIC,
    EXPONENTIAL,
    GAMMA,
    LOGNORMAL,
    UNIFORM,
    stream_keys,
    uniforms,
)

_BATCH = 8192


# ---------------------------------------------------------------- linear algebra

def lu_factor(a, tol):
    n = a.shape[0]
    lu = np.array(a, dtype=np.float64, copy=True)
    piv = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        best = abs(lu[p, k])
        if best == 0.0 or best < tol:
            return lu, piv, k, best
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            piv[[k, p]] = piv[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, piv, -1, 0.0


def lu_solve(lu, piv, b):
    n = lu.shape[0]
    x = np.asarray(b, dtype=np.float64)[piv].copy()
    for i in range(n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def power_radius(a, shift, max_iter, tol):
    n = a.shape[0]
    b = a + shift * np.eye(n)
    bt = b.T.copy()
    x = np.full(n, 1.0 / n)
    y = np.full(n, 1.0 / n)
    prev = np.inf
    for it in range(max_iter):
        x = b @ x
        x /= x.sum()
        y = bt @ y
        y /= y.sum()
        bx = b @ x
        yx = y @ x
        lam = (y @ bx) / yx if yx > 0.0 else bx.sum()
        if abs(lam - prev) < tol:
            return lam - shift, it + 1
        prev = lam
    return np.nan, -1


# ---------------------------------------------------------------- random streams

def _normal(keys, ctr):
    u1 = uniforms(keys, ctr)
    u2 = uniforms(keys, ctr + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _gamma(k, theta, keys, ctr):
    k = k.copy()
    boost = np.ones(k.size)
    small = k < 1.0
    if small.any():
        u = uniforms(keys[small], ctr[small])
        ctr[small] += 1
        boost[small] = u ** (1.0 / k[small])
        k[small] += 1.0
    d = k - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(k.size)
    pending = np.arange(k.size)
    while pending.size:
        z = _normal(keys[pending], ctr[pending])
        ctr[pending] += 2
        v = 1.0 + c[pending] * z
        ok = v > 0.0
        idx, z, v = pending[ok], z[ok], v[ok] ** 3
        u = uniforms(keys[idx], ctr[idx])
        ctr[idx] += 1
        dd = d[idx]
        acc = np.log(u) < 0.5 * z * z + dd - dd * v + dd * np.log(v)
        done = idx[acc]
        out[done] = (dd * v * theta[idx] * boost[idx])[acc]
        keep = np.ones(k.size, dtype=bool)
        keep[done] = False
        pending = pending[keep[pending]]
    return out


def _sojourn(code, a, b, keys, ctr):
    """Sample one sojourn per element; advances ``ctr`` in place."""
    out = np.full(code.size, np.nan)
    sel = code == DETERMINISTIC
    out[sel] = a[sel]
    sel = code == EXPONENTIAL
    if sel.any():
        out[sel] = -np.log(uniforms(keys[sel], ctr[sel])) / a[sel]
        ctr[sel] += 1
    sel = code == UNIFORM
    if sel.any():
        out[sel] = a[sel] + (b[sel] - a[sel]) * uniforms(keys[sel], ctr[sel])
        ctr[sel] += 1
    sel = code == LOGNORMAL
    if sel.any():
        out[sel] = np.exp(a[sel] + b[sel] * _normal(keys[sel], ctr[sel]))
        ctr[sel] += 2
    sel = np.flatnonzero(code == GAMMA)
    if sel.size:
        sub = ctr[sel]
        out[sel] = _gamma(a[sel], b[sel], keys[sel], sub)
        ctr[sel] = sub
    return out


def _pick(cum, cur, u):
    return (u[:, None] >= cum[cur]).sum(axis=1)


# ---------------------------------------------------------------- simulation

def passage_times(cum, code, pa, pb, start, target, seed, rep0, n, max_steps):
    times = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    keys = stream_keys(seed, np.arange(rep0, rep0 + n))
    ctr = np.zeros(n, dtype=np.int64)
    cur = np.full(n, start, dtype=np.int64)
    live = np.arange(n)
    while live.size:
        kk, cc = keys[live], ctr[live]
        u = uniforms(kk, cc)
        cc += 1
        src = cur[live]
        nxt = _pick(cum, src, u)
        times[live] += _sojourn(code[src, nxt], pa[src, nxt], pb[src, nxt], kk, cc)
        ctr[live] = cc
        steps[live] += 1
        cur[live] = nxt
        hit = nxt == target
        cut = ~hit & (steps[live] >= max_steps)
        censored[live[cut]] = True
        live = live[~(hit | cut)]
    return times, steps, censored


def _trace_batch(cum, code, pa, pb, starts, absorbing, stop_absorbing, keys,
                 ctr0, max_steps):
    n = starts.size
    ctr = np.full(n, ctr0, dtype=np.int64)
    cur = starts.astype(np.int64).copy()
    k = np.zeros(n, dtype=np.int64)
    live = np.arange(n)
    if stop_absorbing:
        live = live[~absorbing[cur]]
    chunks = []
    while live.size:
        kk, cc = keys[live], ctr[live]
        u = uniforms(kk, cc)
        cc += 1
        src = cur[live]
        nxt = _pick(cum, src, u)
        x = _sojourn(code[src, nxt], pa[src, nxt], pb[src, nxt], kk, cc)
        ctr[live] = cc
        chunks.append((live.copy(), k[live].copy(), src, nxt, x))
        k[live] += 1
        cur[live] = nxt
        done = k[live] >= max_steps
        if stop_absorbing:
            done |= absorbing[src] & (nxt == src)
        live = live[~done]
    if not chunks:
        e = np.empty(0, dtype=np.int64)
        return e, e, e, np.empty(0)
    pos, step, src, dst, soj = (np.concatenate(c) for c in zip(*chunks))
    order = np.lexsort((step, pos))
    return pos[order], src[order], dst[order], soj[order]


def trace_records(cum, code, pa, pb, starts, absorbing, stop_absorbing, seed,
                  rep_ids, ctr0, max_steps, cap):
    out = []
    total = 0
    for lo in range(0, starts.size, _BATCH):
        if total >= cap:
            break
        hi = min(lo + _BATCH, starts.size)
        keys = stream_keys(seed, rep_ids[lo:hi])
        pos, src, dst, soj = _trace_batch(cum, code, pa, pb, starts[lo:hi], absorbing,
                                          stop_absorbing, keys, ctr0, max_steps)
        take = min(pos.size, cap - total)
        out.append((rep_ids[lo:hi][pos[:take]], src[:take], dst[:take], soj[:take]))
        total += take
    if not out:
        e = np.empty(0, dtype=np.int64)
        return e, e, e, np.empty(0)
    rep, src, dst, soj = (np.concatenate(c) for c in zip(*out))
    return rep.astype(np.int64), src.astype(np.int64), dst.astype(np.int64), soj
