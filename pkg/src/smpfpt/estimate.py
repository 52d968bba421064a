"""Plug-in estimation of transition probabilities, sojourn moments and passage moments.

From completed transitions ``i -> j`` with sojourns ``x_ijK``:

    p_hat_ij   = n_ij / sum_k n_ik
    e_hat^(r)_ij = (1 / n_ij) sum_K x_ijK^r

and the passage moments follow by feeding ``p_hat``, ``e_hat`` to
:func:`smpfpt.passage.passage_moments`.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from smpfpt import graph, passage
from smpfpt.errors import DomainError, IncompleteDataError, TraceFormatError, UAViolationError
from smpfpt.model import SmpModel

TRACE_HEADER = ("rep", "from", "to", "sojourn")


@dataclass(frozen=True, eq=False)
class TransitionTrace:
    """Completed transitions, grouped into replications.

    States are 0-based in memory (1-based in CSV files). Within one
    replication consecutive records chain: ``dst`` of a record equals
    ``src`` of the next. Replications occupy contiguous runs of rows.
    """

    rep: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    sojourn: np.ndarray

    def __post_init__(self):
        arrs = {}
        for name in ("rep", "src", "dst"):
            a = np.asarray(getattr(self, name))
            if a.size and not np.issubdtype(a.dtype, np.integer):
                raise TraceFormatError(f"{name} must hold integers")
            arrs[name] = a.astype(np.int64).ravel()
        arrs["sojourn"] = np.asarray(self.sojourn, dtype=np.float64).ravel()
        if len({a.size for a in arrs.values()}) != 1:
            raise TraceFormatError("trace columns have unequal lengths")
        for name, a in arrs.items():
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        _check_trace(self.rep, self.src, self.dst, self.sojourn, offset=0)

    def __len__(self):
        return self.rep.size

    def head(self, n):
        """First ``n`` records (a prefix of a chained trace still chains)."""
        return TransitionTrace(self.rep[:n], self.src[:n], self.dst[:n], self.sojourn[:n])

    @property
    def replications(self):
        return int(np.unique(self.rep).size)


def _check_trace(rep, src, dst, soj, offset):
    """Raise on the first bad record; ``offset`` converts positions to file lines."""
    bad = np.flatnonzero((rep < 0) | (src < 0) | (dst < 0))
    if bad.size:
        raise TraceFormatError(f"row {bad[0] + offset}: negative replication id or state")
    bad = np.flatnonzero(~np.isfinite(soj) | (soj < 0))
    if bad.size:
        raise TraceFormatError(f"row {bad[0] + offset}: sojourn must be finite and >= 0")
    same = rep[1:] == rep[:-1]
    bad = np.flatnonzero(same & (dst[:-1] != src[1:]))
    if bad.size:
        k = bad[0] + 1
        raise TraceFormatError(
            f"row {k + offset}: replication {rep[k]} does not chain "
            f"(previous record ends in state {dst[k - 1] + 1}, this one starts in {src[k] + 1})")
    starts = rep[np.r_[True, ~same]] if rep.size else rep
    if np.unique(starts).size != starts.size:
        raise TraceFormatError("replications must occupy contiguous rows")


def read_trace_csv(path):
    """Read a ``rep,from,to,sojourn`` CSV (1-based states). Row numbers in errors are file lines."""
    rows = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise TraceFormatError(f"row 1: header must be {','.join(TRACE_HEADER)}, got {header}")
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 4:
                raise TraceFormatError(f"row {line}: expected 4 fields, got {len(rec)}")
            try:
                rows.append((int(rec[0]), int(rec[1]) - 1, int(rec[2]) - 1, float(rec[3])))
            except ValueError as exc:
                raise TraceFormatError(f"row {line}: {exc}") from None
    if not rows:
        return TransitionTrace(np.empty(0, int), np.empty(0, int), np.empty(0, int), np.empty(0))
    rep, src, dst, soj = (np.array(c) for c in zip(*rows))
    if (src < 0).any() or (dst < 0).any():
        k = np.flatnonzero((src < 0) | (dst < 0))[0]
        raise TraceFormatError(f"row {k + 2}: states are numbered from 1")
    _check_trace(rep, src, dst, soj, offset=2)
    return TransitionTrace(rep, src, dst, soj)


def write_trace_csv(trace, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r, i, j, x in zip(trace.rep, trace.src, trace.dst, trace.sojourn):
            w.writerow((int(r), int(i) + 1, int(j) + 1, format(float(x), ".17g")))


@dataclass(frozen=True, eq=False)
class TransitionStats:
    """Sufficient statistics: counts ``n_ij`` and power sums ``sum_K x_ijK^r``.

    Merging is associative and commutative, so replications can be
    processed in any grouping.
    """

    counts: np.ndarray
    power_sums: np.ndarray

    @classmethod
    def from_trace(cls, trace, m, order):
        if order < 1:
            raise DomainError(f"moment order must be >= 1, got {order}")
        out = np.flatnonzero((trace.src >= m) | (trace.dst >= m))
        if out.size:
            k = out[0]
            raise TraceFormatError(
                f"record {k}: state {max(trace.src[k], trace.dst[k]) + 1} out of range 1..{m}")
        counts = np.zeros((m, m), dtype=np.int64)
        np.add.at(counts, (trace.src, trace.dst), 1)
        sums = np.zeros((order, m, m))
        for r in range(order):
            np.add.at(sums[r], (trace.src, trace.dst), trace.sojourn ** (r + 1))
        return cls(counts, sums)

    def merge(self, other):
        if self.power_sums.shape != other.power_sums.shape:
            raise DomainError("cannot merge statistics of different shapes")
        return TransitionStats(self.counts + other.counts, self.power_sums + other.power_sums)

    __add__ = merge


@dataclass(frozen=True, eq=False)
class EstimatedModel:
    """Estimated ``p_hat`` and ``e_hat^(1..R)`` with coverage information.

    ``observed[i, j]`` is true iff ``n_ij >= 1``; ``e_hat`` entries of
    unobserved cells are 0 and never used.
    """

    p_hat: np.ndarray
    e_hat: tuple
    counts: np.ndarray
    observed: np.ndarray
    unobserved_rows: tuple
    diagnostics: tuple

    @property
    def m(self):
        return self.p_hat.shape[0]

    @property
    def order(self):
        return len(self.e_hat)

    def to_model(self, state_names=None):
        return SmpModel(self.p_hat, moments=self.e_hat, state_names=state_names)


def from_stats(stats):
    counts = stats.counts
    m = counts.shape[0]
    totals = counts.sum(axis=1)
    visited = totals > 0
    p_hat = np.zeros((m, m))
    p_hat[visited] = counts[visited] / totals[visited, None]
    observed = counts > 0
    e_hat = []
    for sums in stats.power_sums:
        e = np.zeros((m, m))
        e[observed] = sums[observed] / counts[observed]
        e_hat.append(e)
    unobserved = tuple(int(i) for i in np.flatnonzero(~visited))
    diags = tuple(f"row {i + 1} unobserved" for i in unobserved)
    return EstimatedModel(p_hat, tuple(e_hat), counts, observed, unobserved, diags)


def estimate(trace, m, order=1):
    """Estimate the model from a trace over states ``0..m-1``."""
    if len(trace) == 0:
        raise DomainError("cannot estimate from an empty trace")
    return from_stats(TransitionStats.from_trace(trace, m, order))


def estimate_passage(est, j, order=1):
    """Plug-in passage moments ``mu_hat_j^(1..order)``.

    Raises
    ------
    IncompleteDataError
        A state entered by some observed transition was never left.
    UAViolationError
        ``j`` is not universally accessible in the digraph of ``p_hat``.
    """
    if not 0 <= j < est.m:
        raise DomainError(f"target {j} out of range for {est.m} states")
    if order > est.order:
        raise DomainError(f"estimates hold moments up to order {est.order}, {order} requested")
    entered = est.counts.sum(axis=0) > 0
    stuck = [i for i in est.unobserved_rows if entered[i]]
    if stuck:
        raise IncompleteDataError(
            "state(s) " + ", ".join(str(i + 1) for i in stuck)
            + " were entered but never left; their transition rows are unknown")
    g = graph.digraph_of(est.p_hat)
    if not graph.is_ua(g, j):
        raise UAViolationError(j, graph.unreachable_sources(g, j),
                               hint="the trace lacks transitions needed to reach it; collect more data")
    return passage.passage_moments(est.p_hat, list(est.e_hat), j, order)
