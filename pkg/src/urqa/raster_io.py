"""Image, deformation-field, and report I/O plus resolution handling.

Images are consumed as pre-exported raster pyramid levels (8-bit PNG/TIFF);
deformation fields as NPY arrays of shape (H, W, 2) or (2, H, W). Reports are
UTF-8 JSON that round-trips every numeric field exactly.
"""
from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import NonFiniteFieldError, UnsupportedFormatError
from .types import DeformationField, RasterImage

# PIL modes we can map onto 8-bit gray/RGB without losing meaning
_ACCEPTED_MODES = {"1", "L", "LA", "P", "PA", "RGB", "RGBA"}


def load_image(path, source_level: int | None = None) -> RasterImage:
    """Decode an 8-bit PNG/TIFF into a RasterImage; alpha is dropped."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in _ACCEPTED_MODES:
                raise UnsupportedFormatError(
                    f"{path}: unsupported pixel mode {mode!r} (8-bit gray/RGB only)")
            if mode == "1":
                im = im.convert("L")
            elif mode in ("P", "PA"):
                im = im.convert("RGBA")
            if im.mode in ("LA", "RGBA"):
                im = im.convert(im.mode[:-1])
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: cannot decode image: {exc}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise UnsupportedFormatError(f"{path}: corrupt image stream: {exc}") from exc
    return RasterImage(pixels=arr, source_level=source_level)


def save_image(image: RasterImage, path) -> None:
    Image.fromarray(image.pixels).save(path)


def _resize_image(image: RasterImage, out_h: int, out_w: int) -> RasterImage:
    """Area-resample to exact output dimensions, per channel."""
    if (out_h, out_w) == (image.height, image.width):
        return image
    if image.channels == 1:
        planes = [kernels.area_resize(image.pixels.astype(np.float64), out_h, out_w)]
    else:
        planes = [kernels.area_resize(image.pixels[:, :, c].astype(np.float64),
                                      out_h, out_w)
                  for c in range(3)]
    stacked = planes[0] if len(planes) == 1 else np.stack(planes, axis=2)
    pixels = np.floor(np.clip(stacked, 0.0, 255.0) + 0.5).astype(np.uint8)
    return RasterImage(pixels=pixels, source_level=image.source_level)


def eval_dimensions(height: int, width: int, max_eval_size: int) -> tuple[int, int]:
    """Output (height, width) after capping the longer side at max_eval_size."""
    longer = max(height, width)
    if longer <= max_eval_size:
        return height, width
    scale = max_eval_size / longer
    out_h = max(1, int(np.floor(height * scale + 0.5)))
    out_w = max(1, int(np.floor(width * scale + 0.5)))
    return out_h, out_w


def downsample_to_eval(image: RasterImage, max_eval_size: int) -> RasterImage:
    """Box-average down so the longer side is at most max_eval_size.

    Inputs already within the limit are returned unchanged.
    """
    out_h, out_w = eval_dimensions(image.height, image.width, max_eval_size)
    if (out_h, out_w) == (image.height, image.width):
        return image
    return _resize_image(image, out_h, out_w)


def to_grayscale(image: RasterImage) -> RasterImage:
    """BT.601 luminance conversion; grayscale input passes through."""
    if image.channels == 1:
        return image
    p = image.pixels.astype(np.int32)
    gray = (299 * p[:, :, 0] + 587 * p[:, :, 1] + 114 * p[:, :, 2] + 500) // 1000
    return RasterImage(pixels=gray.astype(np.uint8), source_level=image.source_level)


def load_deformation_field(path) -> DeformationField:
    """Read an NPY displacement field, validating dtype, layout, finiteness.

    Accepts float32/float64 arrays shaped (H, W, 2) or (2, H, W); when both
    readings are possible (e.g. (2, N, 2)) channel-last wins.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        arr = np.load(path, allow_pickle=False)
    except (ValueError, OSError, EOFError) as exc:
        raise UnsupportedFormatError(f"{path}: not a readable NPY file: {exc}") from exc
    if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
        raise UnsupportedFormatError(
            f"{path}: dtype must be float32/float64, got {arr.dtype}")
    if arr.dtype.byteorder not in ("<", "=", "|"):
        raise UnsupportedFormatError(f"{path}: big-endian data not supported")
    if arr.ndim != 3:
        raise UnsupportedFormatError(f"{path}: expected 3-D array, got shape {arr.shape}")
    if arr.shape[2] == 2:
        ux, uy = arr[:, :, 0], arr[:, :, 1]
    elif arr.shape[0] == 2:
        ux, uy = arr[0], arr[1]
    else:
        raise UnsupportedFormatError(
            f"{path}: shape {arr.shape} is neither (H, W, 2) nor (2, H, W)")
    ux = np.ascontiguousarray(ux, dtype=np.float64)
    uy = np.ascontiguousarray(uy, dtype=np.float64)
    if not (np.isfinite(ux).all() and np.isfinite(uy).all()):
        raise NonFiniteFieldError(f"{path}: field contains NaN or Inf values")
    return DeformationField(ux=ux, uy=uy)


def save_deformation_field(field: DeformationField, path) -> None:
    """Write a field as NPY (H, W, 2) float64."""
    np.save(path, np.stack([field.ux, field.uy], axis=2))


def write_report(report, path) -> None:
    """Serialize a QualityReport to UTF-8 JSON (lossless float round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def read_report(path):
    from .score_fusion import QualityReport

    with open(path, "r", encoding="utf-8") as fh:
        return QualityReport.from_dict(json.load(fh))
