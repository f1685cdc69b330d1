"""Exception types shared across the package.

Every error raised by the library derives from :class:`PointPropError` so
callers can catch broadly; the concrete subclasses distinguish contract
violations that tests and the service map to specific responses.
"""


class PointPropError(Exception):
    """Base class for all pointprop errors."""


# --- tensor / mask / label file I/O ---

class BadMagicError(PointPropError):
    """File does not start with the FTNS magic bytes."""


class UnsupportedVersionError(PointPropError):
    """FTNS header declares a version this reader does not understand."""


class UnsupportedDtypeError(PointPropError):
    """FTNS header declares a dtype code this reader does not understand."""


class TruncatedPayloadError(PointPropError):
    """File length does not match the header's declared element count."""


class InvalidShapeError(PointPropError):
    """Tensor shape has a zero extent or an unusable rank."""


class NotGrayscale8Error(PointPropError):
    """Mask PNG is not single-channel 8-bit."""


class ClassIdOutOfRangeError(PointPropError):
    """A class id is neither reserved (255) nor below the class count."""


class BadPointFileError(PointPropError):
    """Point-label CSV is malformed."""


# --- geometry / algebra ---

class DimensionMismatchError(PointPropError):
    """Operands have incompatible shapes or vector dimensions."""


class OutOfBoundsError(PointPropError, IndexError):
    """A pixel coordinate or label index is outside its valid range."""


class ShapeMismatchError(PointPropError):
    """Two rasters that must align have different dimensions."""


# --- label sets / proposal loop ---

class EmptyLabelSetError(PointPropError):
    """An operation requires at least one (usable) labeled point."""


class DuplicatePointError(PointPropError):
    """Two labels claim the same pixel with conflicting payloads."""


class AllPixelsLabeledError(PointPropError):
    """No unlabeled pixel remains to propose."""


class LabelDeclinedError(PointPropError):
    """The expert declined to label the proposed pixel."""

    def __init__(self, x: int, y: int):
        super().__init__(f"expert declined to label pixel ({x}, {y})")
        self.x = x
        self.y = y


# --- placement / masks ---

class TooManyPointsError(PointPropError):
    """More points requested than pixels available."""


class EmptyMaskError(PointPropError):
    """Ground-truth mask has no labelable (non-reserved) pixel."""


# --- metrics ---

class EmptyMatrixError(PointPropError):
    """Confusion matrix contains no evaluated pixels."""


# --- harness ---

class MissingFeatureFileError(PointPropError, FileNotFoundError):
    """A dataset mask has no companion feature tensor."""


class MaskShapeMismatchError(ShapeMismatchError):
    """Ground-truth mask is smaller than the feature patch grid."""
