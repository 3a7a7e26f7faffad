"""Custom exception hierarchy for PLVC Quantile."""


class PLVCError(Exception):
    """Base exception for all PLVC Quantile errors."""

    pass


class ArgumentError(PLVCError):
    """Raised when an operation receives an invalid argument."""

    pass


# =============================================================================
# Data errors
# =============================================================================


class DataError(PLVCError):
    """Base class for problems with input data."""

    pass


class SchemaError(DataError):
    """Raised when a CSV file lacks required columns."""

    def __init__(self, missing: list[str], path: str | None = None):
        self.missing = missing
        self.path = path
        columns = ", ".join(missing)
        if path:
            message = f"Missing required column(s) {columns} in '{path}'"
        else:
            message = f"Missing required column(s) {columns}"
        super().__init__(message)


class ParseError(DataError):
    """Raised when a cell cannot be parsed as a finite number."""

    def __init__(self, row: int, column: str, value: object = None):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"Row {row}: column '{column}' has non-numeric value {value!r}")


class EmptyInputError(DataError):
    """Raised when an input file contains no data rows."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"Input '{path}' contains no data rows")


class EmptyWindowError(DataError):
    """Raised when no observation lies within the matching window."""

    def __init__(self, t_star: float, tol: float):
        self.t_star = t_star
        self.tol = tol
        super().__init__(f"No observation within {tol} of t*={t_star}")


class ExtrapolationError(DataError):
    """Raised when a time lies outside the observed time range."""

    def __init__(self, t: float, lower: float, upper: float):
        self.t = t
        self.lower = lower
        self.upper = upper
        super().__init__(f"Time {t} outside observed range [{lower}, {upper}]")


# =============================================================================
# Spline errors
# =============================================================================


class SplineError(PLVCError):
    """Base class for spline construction and evaluation errors."""

    pass


class DomainError(SplineError):
    """Raised when a basis is evaluated outside [0, 1]."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"Time {t} outside the spline domain [0, 1]")


class DegenerateKnotsError(SplineError):
    """Raised when internal knots cannot be made strictly increasing."""

    pass


# =============================================================================
# Numerical errors
# =============================================================================


class NumericalError(PLVCError):
    """Base class for numerical failures."""

    pass


class SolverError(NumericalError):
    """Raised when the linear program cannot be solved."""

    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(f"Quantile LP failed: {message}")


class IllConditionedError(NumericalError):
    """Raised when a matrix needed for a projection or test is numerically singular."""

    def __init__(self, what: str, condition: float):
        self.what = what
        self.condition = condition
        super().__init__(f"{what} is ill-conditioned (condition estimate {condition:.3e})")


class DegenerateDesignError(NumericalError):
    """Raised when the residualized test block carries no information."""

    pass


class NoPairsError(NumericalError):
    """Raised when no subject has two or more observations."""

    def __init__(self) -> None:
        super().__init__("No subject has two or more observations; cannot estimate delta")


class FitError(NumericalError):
    """Raised when a fit at a specific quantile level fails."""

    def __init__(self, tau: float, message: str):
        self.tau = tau
        super().__init__(f"Fit failed at tau={tau}: {message}")


class ReplicateFailureError(PLVCError):
    """Raised when too many Monte Carlo replicates fail."""

    def __init__(self, failures: int, reps: int, cap: float):
        self.failures = failures
        self.reps = reps
        self.cap = cap
        super().__init__(
            f"{failures} of {reps} replicates failed, exceeding the {cap:.0%} failure cap"
        )


class AuditLogError(PLVCError):
    """Raised when the run ledger cannot be written."""

    pass
