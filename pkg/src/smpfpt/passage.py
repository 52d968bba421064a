"""First-passage moments of a semi-Markov process to a universally accessible state.

For a target ``j`` let ``A = I - p I(-j)``, i.e. the identity minus ``p``
with column ``j`` zeroed. Then

    A mu1 = (p o e1) 1
    A mur = (p o er) 1 + sum_{s=1}^{r-1} C(r, s) (p o e(r-s)) (mask_j o mus)

where ``o`` is the Hadamard product and ``mask_j`` is the all-ones vector
with entry ``j`` zeroed. ``A`` is factored once and reused for every order.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from smpfpt import graph, linalg
from smpfpt.errors import (
    DomainError,
    InternalInconsistencyError,
    SingularMatrixError,
    UAViolationError,
)

MAX_ORDER = 20


@dataclass(frozen=True, eq=False)
class PassageMoments:
    """``mu[r - 1, i]`` is the r-th moment of the first-passage time from ``i`` to ``target``.

    The ``target`` entry is the first-return moment. ``notes`` carries
    advisory messages (for example, an absorbing target).
    """

    target: int
    mu: np.ndarray
    notes: tuple = ()

    @property
    def order(self):
        return self.mu.shape[0]

    def vectors(self):
        """Moment vectors as lists, order 1 first."""
        return [row.tolist() for row in self.mu]


def masked(p, j):
    """``p I(-j)``: ``p`` with column ``j`` set to zero."""
    out = np.array(p, dtype=np.float64, copy=True)
    out[:, j] = 0.0
    return out


def finite_states(p, j):
    """Mask of source states whose passage time to ``j`` is almost surely finite.

    A source is excluded when, moving only through states other than ``j``,
    it can reach a state with no path to ``j``.
    """
    g = graph.digraph_of(p)
    doomed = ~graph.sources_of(g, j)
    h = graph.digraph_of(masked(p, j))
    bad = doomed.copy()
    for k in np.flatnonzero(doomed):
        bad |= graph.reaching(h, k)
    return ~bad


def passage_moments(p, moments, j, order=None, partial=False):
    """Solve for the first-passage moment vectors ``mu_j^(1..order)``.

    Parameters
    ----------
    p : (m, m) array_like
        Row-stochastic embedded transition matrix.
    moments : sequence of (m, m) array_like
        Raw sojourn moments ``e^(1), e^(2), ...``.
    j : int
        Target state (0-based).
    order : int, optional
        Highest moment order; defaults to ``len(moments)``.
    partial : bool
        If true, return ``inf`` for sources whose passage is not almost
        surely finite instead of raising, and solve on the rest.

    Raises
    ------
    UAViolationError
        ``j`` is not universally accessible (and ``partial`` is false).
    InternalInconsistencyError
        The solver reports a singular system although ``j`` is UA.
    """
    p = graph.check_stochastic(p)
    m = p.shape[0]
    if not 0 <= j < m:
        raise DomainError(f"target {j} out of range for {m} states")
    order = len(moments) if order is None else int(order)
    if not 1 <= order <= MAX_ORDER:
        raise DomainError(f"moment order must lie in 1..{MAX_ORDER}, got {order}")
    if order > len(moments):
        raise DomainError(f"{len(moments)} moment matrices given, order {order} requested")
    es = []
    for r, e in enumerate(moments[:order]):
        e = np.asarray(e, dtype=np.float64)
        if e.shape != p.shape:
            raise DomainError(f"e^({r + 1}) has shape {e.shape}, expected {p.shape}")
        # cells with p_ik = 0 are never read
        es.append(linalg.as_matrix(np.where(p > 0, e, 0.0), f"e^({r + 1})"))

    g = graph.digraph_of(p)
    notes = []
    if p[j, j] >= 1.0 - graph.STOCHASTIC_TOL:
        notes.append(f"target state {j + 1} is absorbing; its entry is the self-loop sojourn moment")
    if graph.is_ua(g, j):
        keep = np.ones(m, dtype=bool)
    elif partial:
        keep = finite_states(p, j)
        notes.append(f"{int((~keep).sum())} source state(s) have infinite passage moments")
    else:
        raise UAViolationError(j, graph.unreachable_sources(g, j))

    mu = np.full((order, m), np.inf)
    idx = np.flatnonzero(keep)
    if idx.size:
        sub = np.ix_(idx, idx)
        a = np.eye(idx.size) - masked(p, j)[sub]
        try:
            fac = linalg.lu_factor(a)
        except SingularMatrixError as exc:
            raise InternalInconsistencyError(
                f"graph test says state {j + 1} is reachable but the solver found a "
                f"singular system (pivot {exc.pivot_index})") from exc
        weighted = [linalg.hadamard(p, e)[sub] for e in es]
        rows = [(p[idx] * e[idx]).sum(axis=1) for e in es]
        mask = np.ones(idx.size)
        mask[idx == j] = 0.0
        for r in range(1, order + 1):
            rhs = rows[r - 1].copy()
            for s in range(1, r):
                rhs += comb(r, s) * (weighted[r - s - 1] @ (mask * mu[s - 1, idx]))
            mu[r - 1, idx] = fac.solve(rhs)
    mu.setflags(write=False)
    return PassageMoments(int(j), mu, tuple(notes))


def first_moment(model, j):
    """Mean first-passage times to ``j`` from every state."""
    return passage_moments(model.p, model.moment_matrices(1), j, 1).mu[0].copy()


def higher_moments(model, j, order, partial=False):
    """First-passage moments of orders ``1..order`` to ``j``."""
    if not 1 <= order <= MAX_ORDER:
        raise DomainError(f"moment order must lie in 1..{MAX_ORDER}, got {order}")
    return passage_moments(model.p, model.moment_matrices(order), j, order, partial)


def first_step_residual(p, moments, pm):
    """Largest violation of the first-step equations by ``pm``.

    Checks, for each finite source ``i`` and order ``r``,

        mu_ij^(r) = sum_k p_ik e_ik^(r)
                    + sum_{s=1}^{r} C(r, s) sum_{k != j} p_ik e_ik^(r-s) mu_kj^(s)

    with ``e^(0) = 1``, written out element by element.
    """
    p = np.asarray(p, dtype=np.float64)
    m = p.shape[0]
    j = pm.target
    mu = pm.mu
    worst = 0.0
    for r in range(1, pm.order + 1):
        for i in range(m):
            if not np.isfinite(mu[r - 1, i]):
                continue
            rhs = 0.0
            for k in range(m):
                if p[i, k] != 0.0:
                    rhs += p[i, k] * moments[r - 1][i, k]
            for s in range(1, r + 1):
                inner = 0.0
                for k in range(m):
                    if k == j or p[i, k] == 0.0:
                        continue
                    e = 1.0 if s == r else moments[r - s - 1][i, k]
                    inner += p[i, k] * e * mu[s - 1, k]
                rhs += comb(r, s) * inner
            worst = max(worst, abs(mu[r - 1, i] - rhs))
    return worst


def verify_first_step(model, pm):
    """:func:`first_step_residual` for a model's own moment matrices."""
    return first_step_residual(model.p, model.moment_matrices(pm.order), pm)


def residual_bound(pm):
    """Acceptance bound ``1e-8 (1 + max |mu|)`` over the finite entries."""
    finite = pm.mu[np.isfinite(pm.mu)]
    return 1e-8 * (1.0 + (np.abs(finite).max() if finite.size else 0.0))
