"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: usage errors exit 1,
DataFormatError exits 2, TransportError exits 3.
"""


class InjectRankError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(InjectRankError):
    """Malformed or inconsistent input data (bad lines, duplicate ids, missing queries)."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class DegenerateStatsError(InjectRankError):
    """A per-list normalization cannot be computed (constant list or zero sum)."""


class TransportError(InjectRankError):
    """An external scorer could not be reached or replied with garbage.

    Carries the pair ids of the batch that failed so callers can retry or
    report precisely; partial results are never returned silently.
    """

    def __init__(self, message: str, pair_ids: tuple[str, ...] = ()):
        super().__init__(message)
        self.pair_ids = tuple(pair_ids)
