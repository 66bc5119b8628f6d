"""Core value types: raster images, tissue masks, deformation fields.

All grids are numpy arrays in row-major (H, W[, C]) layout. Instances are
treated as immutable after construction and are safe to share across worker
threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RasterImage:
    """Decoded 8-bit image: (H, W) grayscale or (H, W, 3) RGB."""

    pixels: np.ndarray
    source_level: int | None = None

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        if p.ndim == 3 and p.shape[2] == 1:
            p = p[:, :, 0]
        if p.ndim not in (2, 3) or (p.ndim == 3 and p.shape[2] != 3):
            raise ValueError("pixels must have shape (H, W) or (H, W, 3)")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        self.pixels = p

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3


@dataclass
class DeformationField:
    """Per-pixel displacement vectors in pixels at field resolution."""

    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        ux = np.ascontiguousarray(self.ux, dtype=np.float64)
        uy = np.ascontiguousarray(self.uy, dtype=np.float64)
        if ux.ndim != 2 or ux.shape != uy.shape:
            raise ValueError("ux and uy must be 2-D grids of identical shape")
        if ux.shape[0] < 1 or ux.shape[1] < 1:
            raise ValueError("field must be at least 1x1")
        self.ux, self.uy = ux, uy

    @property
    def height(self) -> int:
        return self.ux.shape[0]

    @property
    def width(self) -> int:
        return self.ux.shape[1]


@dataclass
class TissueMask:
    """Binary tissue mask (1 = tissue) with thresholding provenance."""

    bits: np.ndarray
    otsu_threshold: int = 0
    degenerate: bool = False

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if b.ndim != 2:
            raise ValueError("mask must be a 2-D grid")
        if b.max(initial=0) > 1:
            raise ValueError("mask values must be 0 or 1")
        if not 0 <= self.otsu_threshold <= 255:
            raise ValueError("otsu_threshold must be in [0, 255]")
        self.bits = b

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def tissue_count(self) -> int:
        return int(self.bits.sum())
