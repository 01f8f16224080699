"""Exception hierarchy.

Every error raised by the library derives from :class:`CpextError`.  The
``exit_code`` attribute is what the command line returns when the error
escapes a subcommand.
"""


class CpextError(Exception):
    exit_code = 1


class DomainError(CpextError):
    """Input is well formed but outside the domain of the operation."""

    exit_code = 1


class NumericalError(CpextError):
    """A tolerance decision could not be made cleanly."""

    exit_code = 3


class ParseError(CpextError):
    exit_code = 2


class NonHermitian(DomainError):
    pass


class NotPSD(DomainError):
    pass


class RangeMismatch(DomainError):
    pass


class KernelMismatch(DomainError):
    pass


class OrderViolation(DomainError):
    pass


class BadScalar(DomainError):
    pass


class NotInvertible(DomainError):
    pass


class DimMismatch(DomainError):
    pass


class AlgebraMismatch(DimMismatch):
    pass


class NotCP(DomainError):
    pass


class UnitNotInvertible(DomainError):
    pass


class OffDiagonalLeak(NumericalError):
    pass


class ZeroMap(DomainError):
    pass


class NotDominated(DomainError):
    pass


class ReconstructionFailure(NumericalError):
    pass


class NotPure(DomainError):
    pass


class NotUnital(DomainError):
    pass


class NotContractive(DomainError):
    pass


class NotCommutativeAlgebra(DomainError):
    pass


class InvalidSpec(DomainError):
    pass


class InfeasibleParams(DomainError):
    pass


class ModelMismatch(DomainError):
    pass
