"""Exception types shared across the package."""


class BmioptError(Exception):
    """Base class for all package errors."""


class ShapeError(BmioptError, ValueError):
    """Operands have inconsistent or invalid dimensions."""


class PreconditionError(BmioptError, ValueError):
    """A documented precondition of an operation is violated."""


class StructureError(BmioptError, ValueError):
    """Problem data violates a required structural assumption."""


class NumericalFailure(BmioptError, RuntimeError):
    """A numerical routine failed to produce a usable result."""


class InfeasibleProblem(BmioptError, RuntimeError):
    """A feasibility subproblem was reported infeasible."""
