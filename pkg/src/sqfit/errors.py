"""Exception hierarchy shared across the package."""


class SqfitError(Exception):
    """Base class for all sqfit errors."""


class DegenerateTaperPlane(SqfitError):
    """Point lies on the taper singular plane f_k(z) = 0."""


class BendOutOfRange(SqfitError):
    """Point falls outside the principal branch of the bend inverse."""


class DegenerateOrigin(SqfitError):
    """Radial projection is undefined at the canonical origin."""


class InvalidSpacing(SqfitError):
    """Surface-sampling spacing or count is not positive."""


class TooFewPoints(SqfitError):
    """Cloud has fewer points than the fitting minimum (13)."""


class DegenerateCloud(SqfitError):
    """Cloud extent along a principal axis is numerically zero."""


class NonFiniteResidual(SqfitError):
    """Residual function produced NaN/Inf at the starting point."""


class CoincidentCentroid(SqfitError):
    """A clustering centroid coincides with the sample point."""


class InvalidK(SqfitError):
    """Evaluation sample count is below the minimum."""


class MalformedHeader(SqfitError):
    """Point-cloud file header could not be parsed."""


class UnsupportedPlyEncoding(SqfitError):
    """PLY encoding other than ascii / binary_little_endian."""


class EmptyCloud(SqfitError):
    """File contained no usable points."""


class SchemaViolation(SqfitError):
    """Model JSON does not match the documented schema."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
