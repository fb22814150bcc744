"""Exception types shared across the simulator."""

from __future__ import annotations


class DuoSpaceError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DuoSpaceError):
    """Invalid scenario or task-graph configuration.

    ``key`` names the offending field when one can be identified.
    """

    def __init__(self, message: str, key: str | None = None) -> None:
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ParseError(DuoSpaceError):
    """Malformed input; carries a byte offset or a 1-based line number."""

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None) -> None:
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ZeroQuaternion(DuoSpaceError, ValueError):
    pass


class OutOfRange(DuoSpaceError, ValueError):
    pass


class DimensionMismatch(DuoSpaceError, ValueError):
    pass


class MissingProvenance(DuoSpaceError):
    pass


class EmptyTrace(DuoSpaceError):
    pass


class EmptyHistory(DuoSpaceError):
    pass


class StaleCalibration(DuoSpaceError):
    pass


class NonMonotonicTimestamps(ParseError):
    pass


class TrajectoryExhausted(OutOfRange):
    """Playback ran past the end of a trajectory."""
