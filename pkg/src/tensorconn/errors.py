"""Exception hierarchy shared by all tensorconn modules.

The CLI maps these onto exit codes: validation problems exit 1, numerical
failures exit 2, file/format problems exit 3.
"""


class TensorConnError(Exception):
    """Base class for all tensorconn errors."""


class InvalidInputError(TensorConnError):
    """An argument violates a documented precondition or config range."""


class GenerationError(TensorConnError):
    """Synthetic-signal generation failed (instability, rejection limit)."""


class NumericalError(TensorConnError):
    """An iterative solver produced non-finite values."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class FormatError(TensorConnError):
    """A container file is malformed; ``offset`` is the failing byte."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
