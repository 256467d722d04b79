"""Exception hierarchy.

Every error raised by the library derives from :class:`QdivError`.  The CLI
maps :class:`ValidationError` to exit code 2 and :class:`NumericalError` to
exit code 3.
"""


class QdivError(Exception):
    """Base class for all library errors."""


class ValidationError(QdivError, ValueError):
    """An input violates a stated invariant.

    Parameters
    ----------
    invariant : str
        Short name of the violated invariant (``"trace"``, ``"hermitian"``,
        ``"positivity"``, ``"choi_psd"`` ...).
    message : str
        Human readable detail, including offending values.
    """

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")


class DomainError(ValidationError):
    """A scalar function was evaluated outside its domain."""

    def __init__(self, message):
        super().__init__("domain", message)


class DimensionError(ValidationError):
    def __init__(self, message):
        super().__init__("dimension", message)


class NumericalError(QdivError, ArithmeticError):
    """A numerical procedure failed (singular solve, positivity lost, ...)."""


class SingularityError(NumericalError):
    pass


class BoundaryError(NumericalError):
    """A state left the interior of the positive cone."""
