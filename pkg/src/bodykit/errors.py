"""Exception and warning types shared across the toolkit."""


class BodykitError(Exception):
    """Base class for all toolkit errors."""


class NonManifoldEdge(BodykitError):
    """An intersected mesh edge is shared by a number of triangles != 2."""

    def __init__(self, edge, count):
        self.edge = (int(edge[0]), int(edge[1]))
        self.count = int(count)
        super().__init__(f"edge {self.edge} shared by {self.count} triangles, expected 2")


class DegenerateSection(BodykitError):
    """Cross-section points are collinear; no 2D hull exists."""


class InvalidParams(BodykitError):
    """A body parameter is outside its allowed range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(BodykitError):
    """A mesh or skeleton file could not be parsed."""


class MissingJoint(BodykitError):
    """A required skeleton joint is absent."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"missing skeleton joint: {name}")


class NotWatertight(UserWarning):
    """Warning: an imported mesh is not closed; annotation may still proceed."""


class NoSection(BodykitError):
    """A measurement plane does not intersect the mesh."""


class AmbiguousSection(BodykitError):
    """Two candidate loops are equidistant from the anchor within 1 mm."""


class EmptyRegion(BodykitError):
    """A scanned measurement region contains no usable level."""


class AxillaNotFound(BodykitError):
    """No single-loop level found within the search range below the shoulder."""


class CrotchNotFound(BodykitError):
    """No two-to-one loop transition found below the pelvis."""


class TooFewPoints(BodykitError):
    """Requested more subsamples than points available."""


class DegenerateCloud(BodykitError):
    """Point cloud has zero extent and cannot be normalized."""


class ZeroVariance(BodykitError):
    """Image set has zero pixel variance and cannot be standardized."""


class IdMismatch(BodykitError):
    """Prediction and ground-truth sample ids do not align."""


class MissingFold(BodykitError):
    """Predictions do not cover every test fold."""


class TooFewSamples(BodykitError):
    """Not enough samples for the requested split."""


class MeasurementError(BodykitError):
    """A measurement failed; carries the measurement name and the cause."""

    def __init__(self, measurement, cause):
        self.measurement = measurement
        self.cause = cause
        super().__init__(f"{measurement}: {cause}")
