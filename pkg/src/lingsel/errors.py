"""Error taxonomy shared by the library and the command-line tool.

Exit codes: usage errors map to 1, data errors to 2, numeric errors to 3.
"""


class LingselError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(LingselError):
    """Bad invocation: unknown method, invalid flag value, missing argument."""

    exit_code = 1


class DataError(LingselError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class ManifestError(DataError):
    """A manifest or scores file failed validation; message carries the line."""


class BinaryFormatError(DataError):
    """An embedding blob failed header or size validation."""


class NumericError(LingselError):
    """A numeric procedure cannot proceed or has gone non-finite."""

    exit_code = 3


class DegenerateDataError(NumericError):
    """Input data admits no meaningful fit (e.g. zero variance everywhere)."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
