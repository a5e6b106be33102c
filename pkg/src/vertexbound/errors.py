"""Exception taxonomy shared by every layer of the engine.

All failures that a caller can act on derive from :class:`VertexboundError`.
The distinction that matters in practice is between *input* problems
(:class:`InputShapeError`, :class:`ConfigError`), *honest refusals* where a
truncated computation cannot certify an answer (:class:`TruncationError`,
:class:`NotCofiniteUpToDepth`, :class:`IrregularSingularity`,
:class:`LogDepthExceeded`), and :class:`InternalInvariantViolation`, which
always indicates a bug and is never raised on well-formed input.
"""


class VertexboundError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class InputShapeError(VertexboundError):
    """An argument has the wrong shape, grading, or parent object."""

    exit_code = 2


class ConfigError(VertexboundError):
    """A run configuration file is malformed or inconsistent."""

    exit_code = 2


class TruncationError(VertexboundError):
    """The requested quantity is not certified at the working depth.

    Raised instead of silently returning data that depends on components
    above the truncation depth.  Increasing the depth of the offending
    realization is always a valid remedy.
    """

    exit_code = 3


class NotCofiniteUpToDepth(VertexboundError):
    """No trailing window of zero quotient dimensions inside the depth.

    Either the module genuinely fails to be C_1-cofinite or the truncation
    depth is too small to exhibit the stabilization window.
    """

    exit_code = 4


class IrregularSingularity(VertexboundError):
    """The coefficient matrix has a pole of order > 1 at z = 0."""

    exit_code = 5


class LogDepthExceeded(VertexboundError):
    """A solution basis needs higher log powers than the requested bound."""

    exit_code = 6


class InternalInvariantViolation(VertexboundError):
    """An internal consistency check failed; this is a bug, not bad input."""

    exit_code = 7
