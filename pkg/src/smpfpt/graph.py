"""Digraph structure of nonnegative matrices.

States are 0-based throughout. Accessibility means a directed path of
length one or more, so ``accessible(g, j, j)`` asks for a genuine cycle
through ``j``.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from smpfpt import linalg
from smpfpt.errors import DimensionError, DomainError

EDGE_EPS = 1e-15
STOCHASTIC_TOL = 1e-9

TRANSIENT = "transient"
RECURRENT = "recurrent"


@dataclass(frozen=True, eq=False)
class Digraph:
    """Adjacency of ``a``: edge ``(i, j)`` iff ``a[i, j] >= 1e-15``."""

    adj: np.ndarray

    @property
    def n(self):
        return self.adj.shape[0]

    @property
    def edges(self):
        return {(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))}

    def successors(self, i):
        return np.flatnonzero(self.adj[i])


def digraph_of(a):
    a = linalg.as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {a.shape}")
    if (a <= -EDGE_EPS).any():
        raise DomainError("digraph_of requires a nonnegative matrix")
    return Digraph(a >= EDGE_EPS)


def _check_state(g, *states):
    for s in states:
        if not 0 <= s < g.n:
            raise DomainError(f"state {s} out of range for {g.n} states")


def reaching(g, j):
    """Boolean mask of vertices with a path of length >= 0 to ``j``."""
    _check_state(g, j)
    seen = np.zeros(g.n, dtype=bool)
    seen[j] = True
    todo = deque([j])
    pred = g.adj.T
    while todo:
        k = todo.popleft()
        for i in np.flatnonzero(pred[k] & ~seen):
            seen[i] = True
            todo.append(i)
    return seen


def sources_of(g, j):
    """Mask of states ``i`` with ``accessible(g, i, j)``."""
    return g.adj[:, reaching(g, j)].any(axis=1)


def accessible(g, i, j):
    _check_state(g, i, j)
    return bool(g.adj[i, reaching(g, j)].any())


def unreachable_sources(g, j):
    return [int(i) for i in np.flatnonzero(~sources_of(g, j))]


def is_ua(g, j):
    """True iff every state, ``j`` included, reaches ``j`` in one or more steps."""
    return bool(sources_of(g, j).all())


def strongly_connected_components(g):
    """Tarjan's algorithm, iterative. Components are sorted lists of vertices."""
    n = g.n
    index = np.full(n, -1)
    low = np.zeros(n, dtype=int)
    on_stack = np.zeros(n, dtype=bool)
    stack, comps = [], []
    counter = 0
    succ = [g.successors(v) for v in range(n)]
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            nbrs = succ[v]
            while pos < len(nbrs):
                w = nbrs[pos]
                pos += 1
                if index[w] < 0:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(int(w))
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def strongly_connected(g):
    return len(strongly_connected_components(g)) == 1


@dataclass(frozen=True, eq=False)
class StructureReport:
    """Communicating classes of a stochastic matrix in canonical order.

    ``permutation[k]`` is the original state placed at canonical position
    ``k``; transient classes come first, closed (recurrent) classes last,
    and ``p[np.ix_(permutation, permutation)]`` is block upper-triangular.
    """

    classes: tuple
    kinds: tuple
    radii: tuple
    ua_states: tuple
    irreducible: bool
    permutation: np.ndarray

    def canonical(self, a):
        perm = self.permutation
        return np.asarray(a)[np.ix_(perm, perm)]

    def block_slices(self):
        out, start = [], 0
        for cls in self.classes:
            out.append(slice(start, start + len(cls)))
            start += len(cls)
        return out


def check_stochastic(p, name="p"):
    p = linalg.as_matrix(p, name)
    if p.shape[0] != p.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {p.shape}")
    if (p < 0).any() or (p > 1).any():
        raise DomainError(f"{name} has entries outside [0, 1]")
    bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > STOCHASTIC_TOL)
    if bad.size:
        raise DomainError(f"{name} is not a stochastic matrix (row {bad[0] + 1} does not sum to 1)")
    return p


def _depths(g, comps, owner):
    """Longest-path depth of each class in the condensation."""
    k = len(comps)
    succ = [set() for _ in range(k)]
    indeg = np.zeros(k, dtype=int)
    for c, members in enumerate(comps):
        for v in members:
            for w in g.successors(v):
                d = owner[w]
                if d != c and d not in succ[c]:
                    succ[c].add(d)
                    indeg[d] += 1
    depth = np.zeros(k, dtype=int)
    todo = deque(c for c in range(k) if indeg[c] == 0)
    while todo:
        c = todo.popleft()
        for d in succ[c]:
            depth[d] = max(depth[d], depth[c] + 1)
            indeg[d] -= 1
            if indeg[d] == 0:
                todo.append(d)
    return depth, succ


def structure(p):
    """Classify the states of a row-stochastic matrix.

    Returns the SCC decomposition in canonical order, each class's kind and
    diagonal-block spectral radius, the set of universally accessible
    states, and the irreducibility flag.
    """
    p = check_stochastic(p)
    g = digraph_of(p)
    comps = strongly_connected_components(g)
    owner = np.empty(g.n, dtype=int)
    for c, members in enumerate(comps):
        owner[members] = c
    depth, succ = _depths(g, comps, owner)
    closed = [not succ[c] for c in range(len(comps))]
    transient = sorted((c for c in range(len(comps)) if not closed[c]),
                       key=lambda c: (depth[c], comps[c][0]))
    recurrent = sorted((c for c in range(len(comps)) if closed[c]), key=lambda c: comps[c][0])
    order = transient + recurrent
    classes = tuple(tuple(comps[c]) for c in order)
    kinds = tuple(RECURRENT if closed[c] else TRANSIENT for c in order)
    radii = tuple(linalg.spectral_radius(p[np.ix_(cls, cls)]) for cls in classes)
    ua = tuple(j for j in range(g.n) if is_ua(g, j))
    perm = np.array([v for cls in classes for v in cls], dtype=int)
    return StructureReport(classes, kinds, radii, ua, len(comps) == 1, perm)
