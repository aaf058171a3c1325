"""Exception hierarchy shared by the geometry, tiling, model and pipeline layers."""


class RhomboidPoolError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(RhomboidPoolError):
    pass


class DegenerateSimplex(GeometryError):
    """The d+1 points of a simplex are affinely dependent (within tolerance)."""


class GeneralPositionViolation(GeometryError):
    """Raised when a cloud breaks general position; ``violations`` lists offending subsets."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class JitterFailed(GeometryError):
    pass


class TooFewPoints(GeometryError):
    pass


class OrderOutOfRange(RhomboidPoolError, ValueError):
    pass


class UnknownVertex(RhomboidPoolError, KeyError):
    pass


class ShapeMismatch(RhomboidPoolError, ValueError):
    pass


class LPNumericalFailure(RhomboidPoolError):
    pass


class IterationCapExceeded(LPNumericalFailure):
    pass


class NonFiniteActivation(RhomboidPoolError, FloatingPointError):
    pass


class NonFiniteLoss(RhomboidPoolError, FloatingPointError):
    pass


class EmptyDataset(RhomboidPoolError, ValueError):
    pass


class ParseError(RhomboidPoolError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantViolation(RhomboidPoolError, ValueError):
    def __init__(self, message, record=None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record


class DisconnectedGraph(RhomboidPoolError, ValueError):
    pass


class TooFewEigenvectors(RhomboidPoolError, ValueError):
    pass


class UnknownArtifact(RhomboidPoolError, FileNotFoundError):
    pass
