"""Exception hierarchy shared by the library and the CLI.

Every input problem raises :class:`InputError` (or a subclass) carrying a short
machine-readable ``code``; the CLI maps these to a dedicated exit status.
:class:`InconsistencyError` signals a broken internal invariant, e.g. a lower
bound that exceeds an upper bound.
"""


class RSPError(Exception):
    """Base class for errors raised by rspbench."""

    code = "error"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InputError(RSPError, ValueError):
    code = "input"


class EnsembleFileError(InputError):
    code = "malformed"


class InconsistencyError(RSPError, RuntimeError):
    code = "internal-inconsistency"
