"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can map it onto an exit status without string matching.
"""


class ProjsumError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def code(self):
        return type(self).__name__


class NumericalFailure(ProjsumError):
    pass


class InputError(ProjsumError, ValueError):
    """Malformed input (shape, symmetry, schema)."""


class SchemaError(InputError):
    pass


class NotHermitian(InputError):
    pass


class NotPositive(ProjsumError, ValueError):
    pass


class NotSymmetry(ProjsumError, ValueError):
    pass


class Definite(ProjsumError, ValueError):
    pass


class NotTraceless(ProjsumError, ValueError):
    pass


class ZeroMatrix(ProjsumError, ValueError):
    pass


class NotIsotropicWitness(ProjsumError, ValueError):
    pass


class NotFlat(ProjsumError, ValueError):
    pass


class TraceMismatch(ProjsumError, ValueError):
    pass


class NotSum(ProjsumError, ValueError):
    pass


class ConditionFailed(ProjsumError, ValueError):
    """The input fails the decomposability condition.

    The offending :class:`~projsum.linalg.ConditionReport` is kept on
    ``self.report`` when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TargetOutOfRange(ProjsumError, ValueError):
    pass


class NotSubMeasure(ProjsumError, ValueError):
    pass


class NotBalanced(ProjsumError, ValueError):
    pass


class NotSurplus(ProjsumError, ValueError):
    pass
