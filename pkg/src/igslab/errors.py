"""Exception types shared across the package."""


class IgsLabError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(IgsLabError):
    """Malformed graph data, or an operation referencing unknown vertices."""


class BuildError(IgsLabError):
    """Replacement-graph construction failed or exceeded its size cap."""


class SolverError(IgsLabError):
    """The capacity solver failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DegenerateGradientError(IgsLabError):
    """An operation required a nonzero optimal-potential gradient on every edge."""


class SpecFileError(IgsLabError):
    """An IGS spec document could not be parsed or is missing fields."""


class CrossCheckError(IgsLabError):
    """Two independent computations of the same quantity disagree."""
