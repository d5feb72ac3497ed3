"""Exception hierarchy shared by every module."""


class WelError(Exception):
    """Base class for all errors raised by the toolkit."""


class ParseError(WelError):
    """Malformed expression source. ``offset`` is a byte offset into the source."""

    def __init__(self, message, source="", offset=0):
        self.source = source
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(WelError):
    """A primitive was evaluated outside its domain (``node`` names the culprit)."""

    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class NotPositiveDefiniteError(WelError):
    pass


class OutOfDomainError(WelError):
    pass


class ChartError(WelError):
    """Invalid chart assembly (name collisions, sign violations, bad shapes)."""


class FrameError(WelError):
    pass


class TraceError(WelError):
    pass


class ToleranceError(WelError):
    pass


class STDataError(WelError):
    pass


class ODEError(WelError):
    pass


class DegenerateFamilyError(WelError):
    pass


class SpecError(WelError):
    """Metric-spec file failed validation."""
