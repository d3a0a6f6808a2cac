"""Exception hierarchy shared across the pipeline."""


class CogforgeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CogforgeError):
    """Malformed input file or string.

    Carries optional location info (path, 1-based line, 0-based offset)
    so CLI output can point at the offending spot.
    """

    def __init__(self, message, *, path=None, line=None, offset=None):
        self.path = path
        self.line = line
        self.offset = offset
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"offset {offset}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)


class DataError(CogforgeError):
    """Semantically invalid data: invariant violations, bad parameters."""


class PipelineError(CogforgeError):
    """A pipeline stage failed; names the stage and wraps the cause."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
