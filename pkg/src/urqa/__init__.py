"""Registration quality assessment for registered whole-slide image pairs.

Scores a (fixed, registered, deformation field) triple without ground truth:
mask-geometry metrics grade global tissue alignment, deformation-regularity
metrics grade physical plausibility, and a hierarchical rule fuses the two
into an ordinal quality grade.
"""

from .config import EvalConfig, load_config
from .deform_metrics import DeformMetrics, compute_deform_metrics
from .errors import (DegenerateImageError, DimensionMismatchError,
                     EmptyInputError, FieldTooSmallError,
                     InconsistentInputsError, InvalidSpecError,
                     NonFiniteFieldError, UnsupportedFormatError, UrqaError)
from .mask_gen import generate_mask, otsu_threshold
from .mask_metrics import MaskMetrics, compute_mask_metrics
from .pipeline import evaluate_pair, load_manifest, run_batch, run_single
from .raster_io import (downsample_to_eval, load_deformation_field, load_image,
                        read_report, save_deformation_field, to_grayscale,
                        write_report)
from .score_fusion import QualityReport, assemble_report, unify
from .synth import SynthSpec, make_field, make_mask_pair
from .types import DeformationField, RasterImage, TissueMask

__version__ = "0.1.0"

__all__ = [
    "DeformationField", "DeformMetrics", "EvalConfig", "MaskMetrics",
    "QualityReport", "RasterImage", "SynthSpec", "TissueMask",
    "assemble_report", "compute_deform_metrics", "compute_mask_metrics",
    "downsample_to_eval", "evaluate_pair", "generate_mask", "load_config",
    "load_deformation_field", "load_image", "load_manifest", "make_field",
    "make_mask_pair", "otsu_threshold", "read_report", "run_batch",
    "run_single", "save_deformation_field", "to_grayscale", "unify",
    "write_report",
    "UrqaError", "UnsupportedFormatError", "NonFiniteFieldError",
    "DegenerateImageError", "DimensionMismatchError", "FieldTooSmallError",
    "EmptyInputError", "InvalidSpecError", "InconsistentInputsError",
]
