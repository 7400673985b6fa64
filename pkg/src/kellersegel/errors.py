"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: :class:`ValidationError` (bad input, exit 1) and :class:`RuntimeFailure`
(something went wrong while computing, exit 2).
"""


class KellerSegelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(KellerSegelError):
    pass


class RuntimeFailure(KellerSegelError):
    pass


# grid
class BadDimension(ValidationError):
    pass


class IncompatibleBackend(ValidationError):
    pass


class WrongBackend(ValidationError):
    pass


class NonFiniteField(RuntimeFailure):
    pass


# linsolve
class NoConvergence(RuntimeFailure):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonFiniteIterate(RuntimeFailure):
    pass


# scheme
class NegativeInitialData(ValidationError):
    pass


class ZeroInitialMass(ValidationError):
    pass


class OverflowInExponential(RuntimeFailure):
    pass


class BlowupDetected(RuntimeFailure):
    """Raised by the time loop when the density leaves the trusted range.

    ``last_state`` is the last state that passed every check, ``records`` the
    diagnostics emitted so far and ``cause`` the underlying solver failure, if any.
    """

    def __init__(self, message, last_state=None, records=None, cause=None):
        super().__init__(message)
        self.last_state = last_state
        self.records = list(records or [])
        self.cause = cause


# diagnostics
class NegativeDensity(ValidationError):
    pass


class BadExponent(ValidationError):
    pass


# config / io
class SchemaError(ValidationError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class TauRequiresC(SchemaError):
    pass


class CForbiddenWhenTauZero(SchemaError):
    pass


class SnapshotError(ValidationError):
    pass


class BadMagic(SnapshotError):
    pass


class VersionMismatch(SnapshotError):
    pass


class TruncatedFile(SnapshotError):
    pass
