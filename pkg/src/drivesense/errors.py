"""Exception types raised by the pipeline stages."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PipelineError):
    """A sensor or annotation file contains a line that cannot be parsed."""


class DataError(PipelineError):
    """Parsed data violates a structural requirement (ordering, finiteness, emptiness)."""


class AlignmentError(PipelineError):
    """Channels of a trip do not overlap in time, so no common grid exists."""


class TaxonomyError(PipelineError):
    """An annotation references a class name unknown to the active taxonomy."""


class AnnotationError(PipelineError):
    """Annotation intervals are malformed (overlap, inverted bounds)."""


class FeatureError(PipelineError):
    """Feature extraction preconditions are not met (missing channel, short series)."""


class ModelError(PipelineError):
    """Model fitting or prediction received invalid input."""
