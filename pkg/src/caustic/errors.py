class CausticError(Exception):
    """Base class for library errors."""


class ValidationError(CausticError, ValueError):
    """Malformed input: realness, schema, domain of an index."""


class GeometryError(CausticError):
    """Non-positive radius, lost convexity, or a failed ray intersection."""


class ConvergenceError(CausticError):
    """An iterative solver ran out of iterations."""


class ConsistencyError(CausticError):
    """Two independent evaluation routes disagree."""
