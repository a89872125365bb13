"""Exception types shared across the toolkit."""


class DelosError(Exception):
    """Base class for all toolkit errors."""


class DivisionByZero(DelosError):
    pass


class UndefinedDerivative(DelosError):
    """A derivation table entry needed for this computation is UNDEFINED."""


class InconsistentTable(DelosError):
    """Derivation table fails the commutation check."""


class ShapeMismatch(DelosError):
    pass


class ResourceBound(DelosError):
    """A configured degree/step budget was exceeded before completion."""


class RankDrop(DelosError):
    """Symbol rank fell outside the certified range during a staged computation."""


class NotInvolutive(DelosError):
    """Operation requires an involutive system."""


class NonClosedSubstitution(DelosError):
    """Generic point substitution does not cover or respect the jet closure."""


class SingularMetric(DelosError):
    pass


class NonConstantMetric(DelosError):
    """Operation implemented for constant-coefficient metrics only."""


class NotSurjective(DelosError):
    pass


class NotAParametrizationAfterDrop(DelosError):
    """Column drop destroyed the compatibility module or the differential rank."""


class SystemSyntaxError(DelosError):
    """Input file violates the frozen system-file grammar."""


class UnknownIdentifier(SystemSyntaxError):
    """A name in a system file is neither declared nor a builtin token."""
