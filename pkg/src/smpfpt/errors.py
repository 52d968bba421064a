"""Exception hierarchy shared by every module."""


class SmpError(Exception):
    """Base class for all errors raised by smpfpt."""


class DimensionError(SmpError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(SmpError, ValueError):
    """An input lies outside the domain an operation accepts."""


class SingularMatrixError(SmpError, ArithmeticError):
    """A pivot fell below the singularity threshold during factorization."""

    def __init__(self, pivot_index, pivot_value, threshold):
        self.pivot_index = int(pivot_index)
        self.pivot_value = float(pivot_value)
        self.threshold = float(threshold)
        super().__init__(
            f"matrix is singular to working precision: pivot {self.pivot_index} "
            f"has magnitude {abs(self.pivot_value):.3g} < {self.threshold:.3g}"
        )


class IterationLimitError(SmpError, RuntimeError):
    """An iterative method did not converge within its budget."""


class UAViolationError(SmpError):
    """The target state is not reachable from every state.

    ``unreachable`` lists the (0-based) source states that cannot reach
    the target in one or more steps.
    """

    def __init__(self, target, unreachable, hint=""):
        self.target = int(target)
        self.unreachable = tuple(int(i) for i in unreachable)
        labels = ", ".join(str(i + 1) for i in self.unreachable)
        msg = (
            f"state {self.target + 1} is not universally accessible; "
            f"unreachable from state(s) {labels}"
        )
        if hint:
            msg = f"{msg}. {hint}"
        super().__init__(msg)


class InternalInconsistencyError(SmpError, RuntimeError):
    """The graph test and the linear solver disagree about nonsingularity."""


class UnsupportedOperationError(SmpError, TypeError):
    """The operation needs a different model flavor."""


class ModelFormatError(SmpError, ValueError):
    """A model file could not be parsed."""


class TraceFormatError(SmpError, ValueError):
    """A transition trace is malformed."""


class IncompleteDataError(SmpError):
    """Observed data do not cover states the analysis needs."""
