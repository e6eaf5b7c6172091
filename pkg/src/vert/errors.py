"""Exception types shared across the pipeline."""


class VertError(Exception):
    """Base class; carries optional captured tool output."""

    def __init__(self, message: str = "", output: str = ""):
        super().__init__(message)
        self.output = output


class ToolchainMissing(VertError):
    pass


class OracleBuildFailed(VertError):
    pass


class LiftFailed(VertError):
    pass


class AmbiguousDiff(VertError):
    pass


class NoEntryConstants(VertError):
    pass


class PointStale(VertError):
    pass


class UnsupportedType(VertError):
    pass


class UnbalancedDelimiters(VertError):
    pass


class NoDiagnostics(VertError):
    pass


class OverlappingActions(VertError):
    pass


class UnparseableTrace(VertError):
    pass


class BackendUnavailable(VertError):
    pass


class FixtureExhausted(VertError):
    pass
