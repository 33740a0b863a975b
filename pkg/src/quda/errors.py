"""Exception hierarchy shared by every module of the package."""


class QudaError(Exception):
    """Base class for all errors raised by :mod:`quda`.

    ``stage`` is filled in by :func:`quda.model.fit` when an error escapes
    one of the pipeline stages, so the caller can tell which step failed.
    """

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class DataError(QudaError, ValueError):
    """Input data is malformed or unusable."""


class NumericalError(QudaError, ArithmeticError):
    """A numerical routine failed on otherwise well-formed input."""


class NonFinite(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class EmptyInput(DataError):
    pass


class InvalidLabel(DataError):
    pass


class MissingClass(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class TooFewPerClass(DataError):
    pass


class InvalidSpec(DataError):
    pass


class NegativeThreshold(QudaError, ValueError):
    pass


class NonPositiveRho(QudaError, ValueError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class ZeroDiagonal(NumericalError):
    pass


class NoConvergence(NumericalError):
    """An iterative solver exhausted its budget.

    The partially converged result, when there is one, is attached as
    ``result`` so callers can still inspect it.
    """

    def __init__(self, message, *, iterations=None, residuals=None, result=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals
        self.result = result


class ConvergenceWarning(UserWarning):
    """Issued when a solver returns a flagged, non-converged iterate."""


class SchemaVersionMismatch(DataError):
    pass


class CorruptPayload(DataError):
    pass
