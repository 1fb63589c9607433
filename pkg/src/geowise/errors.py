"""Exception types shared across the package."""


class GeowiseError(Exception):
    """Base class for computation failures raised by geowise."""


class UndefinedMetricError(GeowiseError):
    """A metric has no defined value for the given inputs."""


class DegenerateFitError(GeowiseError):
    """A regression or scaling step is degenerate (zero variance)."""


class EmptyInputError(GeowiseError):
    """Too few non-missing observations to compute anything."""


class GeometryError(GeowiseError):
    """Invalid or unsupported geometry."""


class IngestError(GeowiseError):
    """A data file exists but its contents cannot be interpreted."""


class MissingColumnError(GeowiseError):
    """A requested column or property is not present in the input."""


class NeighborError(GeowiseError):
    """Neighbor construction failed or produced an unusable structure."""
