"""Tissue-mask generation: Otsu thresholding plus morphological cleanup.

The mask pipeline is threshold -> 3x3 closing -> 3x3 opening -> removal of
8-connected components below a fraction of the image area. Tissue defaults to
the dark intensity class (stained tissue on bright glass); the bright class
can be selected for inverted modalities.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import DegenerateImageError
from .types import RasterImage, TissueMask


def otsu_threshold(image: RasterImage) -> int:
    """Threshold in [0, 254] maximizing between-class variance; ties take the
    smallest threshold. Raises DegenerateImageError on single-intensity input.
    """
    if image.channels != 1:
        raise ValueError("otsu_threshold expects a grayscale image")
    hist = np.bincount(image.pixels.ravel(), minlength=256).astype(np.int64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateImageError("image has a single intensity value")
    return kernels.otsu_argmax(hist)


def _close_open(mask: np.ndarray) -> np.ndarray:
    # pad by 2 so the 4 erode/dilate passes behave as if the mask sat on an
    # infinite zero background; the result never extends past the frame
    p = np.pad(mask, 2)
    p = kernels.dilate3(p)
    p = kernels.erode3(p)   # closing done
    p = kernels.erode3(p)
    p = kernels.dilate3(p)  # opening done
    return p[2:-2, 2:-2]


def min_component_size(height: int, width: int, fraction: float) -> int:
    return int(math.ceil(fraction * height * width))


def generate_mask(image: RasterImage, *, tissue_is_dark: bool = True,
                  min_component_fraction: float = 0.0005) -> TissueMask:
    """Binary tissue mask from a grayscale image.

    Degenerate (single-intensity) images yield an all-zero mask instead of an
    error so batch runs stay total.
    """
    if image.channels != 1:
        raise ValueError("generate_mask expects a grayscale image")
    try:
        t = otsu_threshold(image)
    except DegenerateImageError:
        return TissueMask(bits=np.zeros(image.pixels.shape, dtype=np.uint8),
                          otsu_threshold=int(image.pixels.flat[0]),
                          degenerate=True)
    if tissue_is_dark:
        raw = (image.pixels <= t).astype(np.uint8)
    else:
        raw = (image.pixels > t).astype(np.uint8)
    cleaned = _close_open(raw)
    min_size = min_component_size(image.height, image.width, min_component_fraction)
    cleaned = kernels.filter_small_components(cleaned, min_size)
    return TissueMask(bits=cleaned, otsu_threshold=t)
