"""Shared test fixtures: the illness-death example and randomized model corpora."""

import numpy as np

from smpfpt.model import SmpModel, SojournDist

P_ILL = np.array([[0.0, 1.0, 0.0], [0.8, 0.0, 0.2], [0.0, 0.0, 1.0]])
E_ILL = np.array([[0.0, 6.0, 0.0], [0.7, 0.0, 1.1], [0.0, 0.0, 0.0]])
MU_ILL = np.array([33.9, 27.9, 0.0])


def patient_p(p):
    return np.array([[0.0, 1.0, 0.0], [p, 0.0, 1.0 - p], [0.0, 0.0, 1.0]])


def patient_model(p=0.8, e=E_ILL):
    return SmpModel(patient_p(p), moments=[e], state_names=["healthy", "ill", "dead"])


def patient_dist_model(family="exponential"):
    """Illness-death model with sojourn means 6, 0.7, 1.1 and an instantaneous self-loop at 3."""
    mk = {
        "exponential": lambda mean: SojournDist.exponential(1.0 / mean),
        "deterministic": SojournDist.deterministic,
    }[family]
    dists = [
        [None, mk(6.0), None],
        [mk(0.7), None, mk(1.1)],
        [None, None, SojournDist.deterministic(0.0)],
    ]
    return SmpModel(P_ILL, distributions=dists, state_names=["healthy", "ill", "dead"])


def random_stochastic(rng, m, density):
    support = rng.random((m, m)) < density
    for i in np.flatnonzero(~support.any(axis=1)):
        support[i, rng.integers(m)] = True
    w = rng.exponential(size=(m, m)) * support
    return w / w.sum(axis=1, keepdims=True)


def _block_triangular(rng, m):
    """Random canonical-form matrix with transient blocks feeding closed blocks, then relabeled."""
    sizes = []
    left = m
    while left:
        s = int(rng.integers(1, left + 1))
        sizes.append(s)
        left -= s
    n_closed = int(rng.integers(1, len(sizes) + 1))
    p = np.zeros((m, m))
    start = 0
    bounds = []
    for s in sizes:
        bounds.append((start, start + s))
        start += s
    for b, (lo, hi) in enumerate(bounds):
        block = random_stochastic(rng, hi - lo, rng.uniform(0.3, 1.0))
        if b < len(bounds) - n_closed:
            # transient: leak some mass to later blocks
            leak = rng.uniform(0.05, 0.6, size=hi - lo)
            later = np.arange(hi, m)
            for r in range(lo, hi):
                q = np.zeros(m)
                q[lo:hi] = block[r - lo] * (1 - leak[r - lo])
                tgt = rng.choice(later, size=min(len(later), int(rng.integers(1, 3))), replace=False)
                q[tgt] += leak[r - lo] * rng.dirichlet(np.ones(tgt.size))
                p[r] = q
        else:
            p[lo:hi, lo:hi] = block
    perm = rng.permutation(m)
    return p[np.ix_(perm, perm)]


def stochastic_corpus(n=520, seed=20240611):
    """Random stochastic matrices, m in 2..8, mixing sparsity, reducibility and periodicity."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        m = int(rng.integers(2, 9))
        kind = k % 6
        if kind in (0, 1):
            p = random_stochastic(rng, m, rng.uniform(0.1, 0.45))
        elif kind == 2:
            p = random_stochastic(rng, m, rng.uniform(0.45, 1.0))
        elif kind == 3:
            p = random_stochastic(rng, m, rng.uniform(0.2, 0.8))
            for a in rng.choice(m, size=int(rng.integers(1, max(2, m // 2))), replace=False):
                p[a] = 0.0
                p[a, a] = 1.0
        elif kind == 4:
            p = _block_triangular(rng, m)
        else:
            perm = rng.permutation(m)
            p = np.eye(m)[perm]
            if rng.random() < 0.5:
                q = random_stochastic(rng, m, 0.3)
                mix = rng.uniform(0.0, 0.5)
                p = (1 - mix) * p + mix * q
        out.append(p)
    return out


def random_dist(rng, mean_scale=1.0, families=("deterministic", "exponential", "uniform",
                                               "gamma", "lognormal")):
    fam = families[int(rng.integers(len(families)))]
    s = mean_scale * rng.uniform(0.2, 2.0)
    if fam == "deterministic":
        return SojournDist.deterministic(s)
    if fam == "exponential":
        return SojournDist.exponential(1.0 / s)
    if fam == "uniform":
        lo = rng.uniform(0.0, s)
        return SojournDist.uniform(lo, 2 * s - lo)
    if fam == "gamma":
        k = rng.uniform(0.6, 4.0)
        return SojournDist.gamma(k, s / k)
    sigma = rng.uniform(0.0, 0.5)
    return SojournDist.lognormal(np.log(s) - 0.5 * sigma ** 2, sigma)


def random_dist_model(rng, p, **kw):
    m = p.shape[0]
    dists = [[random_dist(rng, **kw) if p[i, j] > 0 else None for j in range(m)] for i in range(m)]
    return SmpModel(p, distributions=dists)


def hitting_steps_oracle(p, j, max_iter=5_000_000):
    """Expected embedded-chain steps to reach ``j`` by value iteration.

    Iterates ``h_i = 1 + sum_{k != j} p_ik h_k`` from zero; the sequence is
    monotone, so it stops once an update no longer changes ``h``.
    """
    q = np.array(p, dtype=np.float64)
    q[:, j] = 0.0
    h = np.zeros(q.shape[0])
    for _ in range(max_iter):
        nxt = 1.0 + q @ h
        if np.abs(nxt - h).max() <= 1e-16 * np.abs(nxt).max():
            return nxt
        h = nxt
    raise RuntimeError("value iteration did not settle")


def step_count_moments_oracle(p, j, order, tail=1e-18, max_steps=2_000_000):
    """Raw moments of the step count to ``j`` from the forward hitting distribution."""
    p = np.asarray(p, dtype=np.float64)
    m = p.shape[0]
    alive = np.eye(m)
    out = np.zeros((order, m))
    powers = np.arange(1, order + 1)[:, None]
    for n in range(1, max_steps + 1):
        arrive = alive @ p
        hit = arrive[:, j].copy()
        out += float(n) ** powers * hit[None, :]
        arrive[:, j] = 0.0
        alive = arrive
        if alive.sum() * float(n) ** order < tail:
            return out
    raise RuntimeError("hitting distribution did not die out")
