"""Seeded Monte Carlo simulation of semi-Markov trajectories.

Replication ``k`` draws from its own counter-based stream keyed by
``(seed, k)``, so results do not depend on execution order or on the
kernel backend.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from smpfpt import _rng, graph
from smpfpt._backend import kernels
from smpfpt.errors import DomainError, UAViolationError, UnsupportedOperationError
from smpfpt.estimate import TransitionTrace
from smpfpt.model import kernel_arrays

CENSOR_WARN_FRACTION = 1e-3
_NO_CAP = np.iinfo(np.int64).max


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``initial_state`` is a 0-based state or a probability vector over
    states. ``total_transitions`` optionally caps the length of a trace
    across all replications; ``stop_at_absorbing`` ends a replication once
    it has recorded one self-loop in an absorbing state.
    """

    seed: int
    replications: int = 10_000
    max_transitions: int = 1_000_000
    initial_state: object = 0
    stop_at_absorbing: bool = True
    total_transitions: int = None

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if self.max_transitions < 1:
            raise DomainError("max_transitions must be >= 1")
        if self.total_transitions is not None and self.total_transitions < 1:
            raise DomainError("total_transitions must be >= 1")


@dataclass(frozen=True, eq=False)
class PassageSample:
    """Per-replication first-passage times from ``source`` to ``target``."""

    source: int
    target: int
    times: np.ndarray
    steps: np.ndarray
    censored: np.ndarray

    @property
    def completed(self):
        return self.times[~self.censored]


@dataclass(frozen=True, eq=False)
class EmpiricalPassage:
    """Sample moments ``mean[r - 1, i]`` of ``T^r`` from source ``i`` and their standard errors."""

    target: int
    mean: np.ndarray
    se: np.ndarray
    n: np.ndarray
    censored: np.ndarray
    warnings: tuple = ()


def _require_distributions(model):
    if model.flavor != "distributions":
        raise UnsupportedOperationError(
            "simulation needs sojourn distributions; this model only carries moment matrices")


def _tables(model):
    p = graph.check_stochastic(model.p)
    cum = np.cumsum(p, axis=1)
    cum /= cum[:, -1:]
    cum[:, -1] = 1.0
    code, pa, pb = kernel_arrays(model)
    return np.ascontiguousarray(cum), code, pa, pb


def _starts(cfg, m, rep_ids):
    init = cfg.initial_state
    if np.ndim(init) == 0:
        s = int(init)
        if not 0 <= s < m:
            raise DomainError(f"initial state {s} out of range for {m} states")
        return np.full(rep_ids.size, s, dtype=np.int64), 0
    w = np.asarray(init, dtype=np.float64)
    if w.shape != (m,) or (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError("initial distribution must be a probability vector over the states")
    cum = np.cumsum(w) / w.sum()
    cum[-1] = 1.0
    u = _rng.uniforms(_rng.stream_keys(cfg.seed, rep_ids), np.zeros(rep_ids.size, dtype=np.int64))
    # draw 0 of each stream picks the start state; the walk continues from draw 1
    return np.minimum(np.searchsorted(cum, u, side="right"), m - 1).astype(np.int64), 1


def simulate_trace(model, cfg):
    """Simulate ``cfg.replications`` trajectories and return their transitions."""
    _require_distributions(model)
    cum, code, pa, pb = _tables(model)
    m = model.m
    rep_ids = np.arange(cfg.replications, dtype=np.int64)
    starts, ctr0 = _starts(cfg, m, rep_ids)
    absorbing = np.diag(model.p) >= 1.0 - graph.STOCHASTIC_TOL
    cap = _NO_CAP if cfg.total_transitions is None else int(cfg.total_transitions)
    rep, src, dst, soj = kernels.trace_records(
        cum, code, pa, pb, starts, absorbing, bool(cfg.stop_at_absorbing),
        _rng.as_seed(cfg.seed), rep_ids, ctr0, int(cfg.max_transitions), cap)
    return TransitionTrace(rep, src, dst, soj)


def passage_sample(model, source, target, cfg, rep_offset=0):
    """Simulate ``cfg.replications`` first passages from ``source`` to ``target``.

    The clock starts at a fresh renewal in ``source``; at least one
    transition is made, so ``source == target`` measures first return.
    """
    _require_distributions(model)
    cum, code, pa, pb = _tables(model)
    for s in (source, target):
        if not 0 <= s < model.m:
            raise DomainError(f"state {s} out of range for {model.m} states")
    times, steps, censored = kernels.passage_times(
        cum, code, pa, pb, int(source), int(target), _rng.as_seed(cfg.seed),
        int(rep_offset), int(cfg.replications), int(cfg.max_transitions))
    return PassageSample(int(source), int(target), times, steps, censored)


def _mean_se(x):
    """Mean and standard error, computed on data shifted by its first value."""
    n = x.size
    if n == 0:
        return np.nan, np.nan
    d = x - x[0]
    mean = x[0] + d.mean()
    if n < 2:
        return mean, np.nan
    return mean, d.std(ddof=1) / np.sqrt(n)


def empirical_passage(model, j, cfg, order=1):
    """Monte Carlo moments of the first-passage time to ``j`` from every source.

    Source ``i`` uses replication ids ``i * cfg.replications + k``. Censored
    replications (cut off at ``cfg.max_transitions``) are excluded; a
    warning is emitted when they exceed 0.1% of a source's runs.
    """
    _require_distributions(model)
    g = graph.digraph_of(model.p)
    if not graph.is_ua(g, j):
        raise UAViolationError(j, graph.unreachable_sources(g, j))
    if order < 1:
        raise DomainError(f"moment order must be >= 1, got {order}")
    m = model.m
    mean = np.empty((order, m))
    se = np.empty((order, m))
    n = np.empty(m, dtype=np.int64)
    cens = np.empty(m, dtype=np.int64)
    notes = []
    for i in range(m):
        sample = passage_sample(model, i, j, cfg, rep_offset=i * cfg.replications)
        t = sample.completed
        n[i] = t.size
        cens[i] = sample.censored.sum()
        if cens[i] > CENSOR_WARN_FRACTION * cfg.replications:
            msg = (f"source {i + 1}: {cens[i]} of {cfg.replications} replications hit the "
                   f"{cfg.max_transitions}-transition cutoff and were excluded")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
        for r in range(order):
            mean[r, i], se[r, i] = _mean_se(t ** (r + 1))
    return EmpiricalPassage(int(j), mean, se, n, cens, tuple(notes))
