"""Exception types shared across the toolkit.

Missing files raise the builtin ``FileNotFoundError`` and write failures the
builtin ``OSError``; everything the toolkit itself detects derives from
``UrqaError`` so callers can catch one base class.
"""


class UrqaError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedFormatError(UrqaError):
    """Input file is not in a format the toolkit accepts (wrong bit depth,
    wrong channel count, wrong dtype/shape, or a corrupt stream)."""


class NonFiniteFieldError(UrqaError):
    """Deformation field contains NaN or Inf values."""


class DegenerateImageError(UrqaError):
    """Image has a single intensity value; Otsu thresholding is undefined."""


class DimensionMismatchError(UrqaError):
    """Two grids that must share dimensions do not."""


class FieldTooSmallError(UrqaError):
    """Deformation field is too small for finite differences (needs >= 3x3)."""


class EmptyInputError(UrqaError):
    """A statistic was requested over an empty value grid."""


class InvalidSpecError(UrqaError):
    """Synthetic generator spec is malformed."""


class InconsistentInputsError(UrqaError):
    """Metric sets passed to report assembly come from different pairs."""
