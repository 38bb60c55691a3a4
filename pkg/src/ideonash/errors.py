"""Exception hierarchy shared by all solver modules."""


class IdeoNashError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IdeoNashError, ValueError):
    pass


class NegativeDensity(ValidationError):
    pass


class ZeroMass(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class OutOfSupport(ValidationError):
    pass


class BadLambda(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotZeroMass(ValidationError):
    pass


class QuadratureFailure(IdeoNashError):
    pass


class DiagnosticsFailure(IdeoNashError):
    """Raised when a solve finishes but cannot be certified (exit status 2 in the CLI)."""


class Multimodal(DiagnosticsFailure):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class NonUnique(DiagnosticsFailure):
    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class PathBreak(DiagnosticsFailure):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class EndpointOrderViolation(DiagnosticsFailure):
    pass


class NoConvergence(IdeoNashError):
    pass


class DegenerateHessian(IdeoNashError):
    pass


class DegenerateDet(DegenerateHessian):
    pass


class SingularBlock(DegenerateHessian):
    pass


class BoundaryEquilibrium(IdeoNashError):
    """Sensitivity analysis needs an interior equilibrium."""


class SignLawViolation(IdeoNashError):
    pass


class RadiusTooSmall(ValidationError):
    pass


class ZeroEvidence(IdeoNashError):
    pass


class ParseError(IdeoNashError):
    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
