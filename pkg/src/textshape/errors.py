"""Exception types raised by the textshape core."""


class TextShapeError(Exception):
    """Base class for all domain errors."""


class InvalidPolygon(TextShapeError):
    """Polygon is degenerate or self-intersecting."""


class AllRaysMiss(TextShapeError):
    """No ray cast from the sampling origin hit the polygon boundary."""


class Underdetermined(TextShapeError):
    """Too few valid radial samples for the requested fit degree."""


class DegenerateScale(TextShapeError):
    """Radial profile has no positive radius, so no scale can be derived."""


class DegreeMismatch(TextShapeError):
    """Shape vectors of different degrees were combined."""


class AllZeroWeights(TextShapeError):
    """Weight redistribution or normalization received only zeros."""


class BadThresholds(TextShapeError):
    """Classification thresholds violate 0 <= negative <= positive."""


class EmptyBatch(TextShapeError):
    """Loss aggregation received no scoreable points."""


class MisalignedInputs(TextShapeError):
    """Parallel sequences passed to an operation have different lengths."""


class ParseError(TextShapeError):
    """A document could not be parsed; the message locates the problem."""


class TargetTooSmall(TextShapeError):
    """Requested vertex count is below the current vertex count."""


class ServiceError(TextShapeError):
    """The computation service rejected a request or was unreachable."""
