"""Error taxonomy shared across the pipeline.

Exit-code mapping lives in the CLI: usage errors exit 2, data errors 3,
transport errors 4.
"""


class EvologError(Exception):
    """Base class for all pipeline errors."""


class UsageError(EvologError):
    """Bad flags, malformed config, impossible parameter combinations."""


class DataError(EvologError):
    """Malformed or inconsistent input data.

    Carries an optional position (file, line) so parse errors point at the
    offending record.
    """

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class TransportError(EvologError):
    """Network-level failure after retries are exhausted."""
