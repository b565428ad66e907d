"""Exception types shared across the package."""


class BsdofError(Exception):
    """Base class for all package-specific errors."""


class PartitionError(BsdofError, ValueError):
    """Port partition is not a disjoint, in-range cover of the declared roles."""


class PassivityError(BsdofError, ValueError):
    """Scattering matrix has spectral norm above 1."""


class SingularityError(BsdofError, ArithmeticError):
    """Load-coupling resolvent does not exist (or is numerically unusable).

    Carries the reciprocal condition estimate that triggered the failure.
    """

    def __init__(self, message: str, rcond: float = 0.0):
        super().__init__(message)
        self.rcond = rcond


class DegenerateInputError(BsdofError, ValueError):
    """Input is identically zero (or below representable magnitude)."""


class UnsupportedOperationError(BsdofError, ValueError):
    """Operation is undefined for the given load constraint kind."""


class InconsistentStateError(BsdofError, ValueError):
    """Load entry does not belong to the constraint's discrete value set."""


class OracleError(BsdofError, RuntimeError):
    """A channel-map evaluation failed inside a finite-difference probe."""


class OptimizationFailedError(BsdofError, RuntimeError):
    """No optimizer start produced a finite objective value.

    Carries the per-start traces for post-mortem inspection.
    """

    def __init__(self, message: str, traces=None):
        super().__init__(message)
        self.traces = traces if traces is not None else []
