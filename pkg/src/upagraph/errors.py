"""Exception types shared across the package."""


class UPAError(Exception):
    """Base class for all errors raised by upagraph."""


class ValidationError(UPAError, ValueError):
    """An input parameter is outside its admissible range.

    ``field`` names the offending parameter (used by the CLI to name the flag).
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(UPAError, ArithmeticError):
    """A closed form is undefined for the requested parameters (e.g. 2/(1-p) at p=1).

    ``partial`` optionally carries whatever part of the result is still defined.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
