"""Dense matrix primitives: Hadamard product, pivoted LU solves, Perron root.

Matrices are plain float64 ``numpy.ndarray`` objects. Every entry point
validates its operands (finite, non-empty, right rank) before handing them to
the compiled kernels.
"""

from dataclasses import dataclass

import numpy as np

from smpfpt._backend import kernels
from smpfpt.errors import DimensionError, DomainError, IterationLimitError, SingularMatrixError

SINGULAR_RTOL = 1e-12
POWER_SHIFT = 1e-3
POWER_MAX_ITER = 100_000
POWER_TOL = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite, contiguous 2-D float64 array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def as_vector(b, name="vector"):
    arr = np.ascontiguousarray(b, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def _square(a, name="matrix"):
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def hadamard(a, b):
    """Element-wise product of two equally shaped matrices."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def inf_norm(a):
    """Maximum absolute row sum."""
    a = as_matrix(a)
    return float(np.abs(a).sum(axis=1).max())


@dataclass(frozen=True)
class LUFactorization:
    """Row-pivoted factorization ``P a = L U`` that can be reused across right-hand sides."""

    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, b):
        b = as_vector(b, "b")
        if b.shape[0] != self.n:
            raise DimensionError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        return kernels.lu_solve(self.lu, self.piv, b)


def lu_factor(a):
    """Factor a square matrix with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If some pivot has magnitude below ``1e-12 * inf_norm(a)``; the error
        carries the elimination step at which it happened.
    """
    a = _square(a)
    tol = SINGULAR_RTOL * inf_norm(a)
    lu, piv, bad, value = kernels.lu_factor(a, tol)
    if bad >= 0:
        raise SingularMatrixError(bad, value, tol)
    return LUFactorization(lu, piv)


def solve(a, b):
    """Solve ``a x = b`` for square ``a``."""
    a = _square(a)
    b = as_vector(b, "b")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side has length {b.shape[0]}, expected {a.shape[0]}")
    return lu_factor(a).solve(b)


def _isolate(a):
    """Split off eigenvalues exposed by rows or columns with no off-diagonal mass.

    Such a vertex can be permuted to the front or back of a block-triangular
    form as a 1x1 block, so its diagonal entry is an eigenvalue. Repeating
    until nothing changes strips every acyclic part of the digraph, which is
    where power iteration would otherwise converge sublinearly.
    """
    keep = np.arange(a.shape[0])
    isolated = []
    while keep.size:
        sub = a[np.ix_(keep, keep)]
        off = sub > 0.0
        np.fill_diagonal(off, False)
        drop = ~off.any(axis=1) | ~off.any(axis=0)
        if not drop.any():
            break
        isolated.extend(np.diag(sub)[drop])
        keep = keep[~drop]
    return a[np.ix_(keep, keep)], isolated


def spectral_radius(a):
    """Perron root of a nonnegative square matrix.

    Power iteration on ``a + 1e-3 I`` with a two-sided Rayleigh estimate;
    the shift makes periodic (cyclic) blocks converge and is subtracted from
    the result. Stops when successive estimates differ by less than 1e-12.

    Raises
    ------
    DomainError
        If ``a`` has a negative entry.
    IterationLimitError
        If 100 000 iterations pass without convergence.
    """
    a = _square(a)
    if (a < 0).any():
        raise DomainError("spectral_radius requires a nonnegative matrix")
    core, isolated = _isolate(a)
    rho = max(isolated, default=0.0)
    if core.size:
        lam, iters = kernels.power_radius(np.ascontiguousarray(core), POWER_SHIFT,
                                          POWER_MAX_ITER, POWER_TOL)
        if iters < 0:
            raise IterationLimitError(
                f"power iteration did not converge in {POWER_MAX_ITER} iterations"
            )
        rho = max(rho, lam)
    return max(float(rho), 0.0)
