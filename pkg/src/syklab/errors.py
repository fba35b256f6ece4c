"""Shared exception types.

Argument problems raise ValueError; these two carry everything else the
numerical layers need to distinguish.
"""


class StructureError(ValueError):
    """An operator violates a required structure (e.g. parity block form).

    Carries the leaked off-block Frobenius norm when applicable.
    """

    def __init__(self, message, leaked=None):
        super().__init__(message)
        self.leaked = leaked


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""
