"""Exception hierarchy shared across the engine, server and client."""


class XparError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(XparError):
    """Malformed XML input; carries the byte offset of the failure."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte {offset})")
        self.offset = offset


class UnsupportedFeatureError(XparError):
    """Input is well formed but uses a construct outside the supported subset."""


class XPathSyntaxError(XparError):
    """Query text does not match the grammar; carries the character position."""

    def __init__(self, message, pos=None):
        super().__init__(message if pos is None else f"{message} (at position {pos})")
        self.pos = pos


class EvalError(XparError):
    """Query is syntactically valid but cannot be evaluated."""


class WireError(XparError):
    """ERR response received from the query server."""

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class JobError(XparError):
    """A parallel query job failed; partial results are discarded."""
