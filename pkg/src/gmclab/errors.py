"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class GateError(RuntimeError):
    """Raised when a numerical safety gate fails (tail truncation over
    tolerance, negative embedding weights, unresolved oscillation, ...).

    Carries a ``detail`` dict with the offending magnitudes so callers can
    emit machine-readable reports.
    """

    def __init__(self, message, **detail):
        super().__init__(message)
        self.detail = detail
