"""Exception hierarchy shared by all modules."""


class EMToricError(Exception):
    """Base class for all domain errors raised by the package."""


class PolytopeError(EMToricError):
    pass


class Unbounded(PolytopeError):
    pass


class EmptyInterior(PolytopeError):
    pass


class RedundantFacet(PolytopeError):
    pass


class DegenerateCrease(PolytopeError):
    pass


class NonRationalNormal(PolytopeError):
    pass


class NonLatticePolytope(PolytopeError):
    pass


class NumericError(EMToricError):
    """Failures of a numerical procedure (mapped to exit code 5 by the CLI)."""


class NonPositiveWeight(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class SingularGram(NumericError):
    pass


class SingularHessian(NumericError):
    pass


class NonPositiveDefinite(NumericError):
    pass


class NonSymmetric(NumericError):
    pass


class BoundaryTooClose(NumericError):
    pass


class CoordinateSingularity(NumericError):
    pass


class ZeroScalar(NumericError):
    pass


class InconsistentSystem(EMToricError):
    """Overdetermined ansatz system has no solution (residual above tolerance)."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NotPositive(EMToricError):
    """A solved profile polynomial fails to be positive on its interval."""

    def __init__(self, message: str, witness: float | None = None, which: str = ""):
        super().__init__(message)
        self.witness = witness
        self.which = which


class NonPositiveScalarCurvature(EMToricError):
    pass


class SpecParseError(EMToricError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
