"""Exception types shared across the package."""


class WavecastError(Exception):
    """Base class for all package errors."""


class SchemaError(WavecastError):
    """Input file or config does not match the expected schema."""


class EmptyDataError(WavecastError):
    """No usable rows/values after parsing or filtering."""


class MissingArtifactError(WavecastError):
    """A required upstream artifact (series file, model snapshot, report) is absent."""


class NumericError(WavecastError):
    """A numeric failure (non-finite value, degenerate denominator) aborted an operation.

    ``component`` identifies which model component or stage failed, when known.
    """

    def __init__(self, message: str, component: str | None = None):
        super().__init__(message if component is None else f"{component}: {message}")
        self.component = component
