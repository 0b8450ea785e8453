"""Exception hierarchy for situwatch.

Every error raised by the package derives from SituwatchError so callers
can catch the whole family at service boundaries.
"""

from __future__ import annotations


class SituwatchError(Exception):
    """Base class for all situwatch errors."""


class NonFiniteValueError(SituwatchError):
    """A value that must be finite is NaN or infinite."""


class EmptyWindowError(SituwatchError):
    """A channel (or every channel) has no raw samples inside the window."""

    def __init__(self, channels: tuple[str, ...] = (), all_empty: bool = False):
        self.channels = tuple(channels)
        self.all_empty = all_empty
        if all_empty:
            msg = "no channel has any sample inside the window"
        else:
            msg = f"channels without samples inside the window: {', '.join(self.channels)}"
        super().__init__(msg)


class ChannelMismatchError(SituwatchError):
    """A sample references a channel that is not registered."""


class InsufficientHistoryError(SituwatchError):
    """The sample buffer does not span the requested window."""


class LengthMismatchError(SituwatchError):
    """Two series that must have equal length do not."""


class EmptySeriesError(SituwatchError):
    """A series that must be non-empty is empty."""


class SeriesTooShortError(SituwatchError):
    """A series is shorter than the minimum the operation requires."""


class BandTooNarrowError(SituwatchError):
    """The warping band cannot connect the corners of the alignment grid."""


class NoCommonChannelsError(SituwatchError):
    """Two situations share no comparable channel."""


class EmptyRegistryError(SituwatchError):
    """The baseline registry is empty."""


class KTooLargeError(SituwatchError):
    """k exceeds the registry size."""


class UnknownBaselineError(SituwatchError):
    """A baseline id is not present in the registry."""


class MalformedLineError(SituwatchError):
    """An ingest line does not match the wire format."""

    def __init__(self, message: str, line: str):
        self.line = line
        super().__init__(f"{message}: {line!r}")


class BadTimestampError(SituwatchError):
    """An ingest timestamp parses but is not a finite, non-negative number."""

    def __init__(self, message: str, line: str):
        self.line = line
        super().__init__(f"{message}: {line!r}")


class SchemaViolationError(SituwatchError):
    """A persisted document is missing or mistypes a required field."""

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = f"schema violation at field {field!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class IoFailureError(SituwatchError):
    """Reading or writing a persistence path failed."""


class InvalidScenarioError(SituwatchError):
    """A simulator scenario violates its invariants."""


class InvalidConfigError(SituwatchError):
    """A configuration value violates its invariants."""

    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"{field}: {detail}")
