"""Exception hierarchy shared by every epda module."""

from __future__ import annotations


class EpdaError(Exception):
    """Base class for all library errors."""


class ParameterInfeasible(EpdaError, ValueError):
    """Raised when generator or scheme parameters violate a required condition."""


class MalformedArray(EpdaError, ValueError):
    """Raised when an array breaks a structural invariant (shape, label range)."""


class FormatError(EpdaError, ValueError):
    """Raised on malformed serialized input.

    ``line`` and ``field`` locate the problem when they are known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnknownInteger(EpdaError, LookupError):
    """Raised when a sub-array is requested for an integer absent from the array."""


class InvalidEpda(EpdaError, ValueError):
    """Raised when an operation requires a verified EPDA and gets something else."""


class ShapeMismatch(EpdaError, ValueError):
    """Raised when a file library and an array disagree on the subpacketization."""


class DegenerateChannel(EpdaError, RuntimeError):
    """Raised when a channel realization is not generic enough for zero-forcing."""


class DecodeFailure(EpdaError, RuntimeError):
    """Raised when a decoded subfile deviates from ground truth beyond tolerance."""

    def __init__(self, message: str, slot: int | None = None, user: int | None = None):
        self.slot = slot
        self.user = user
        super().__init__(message)
