"""Diagnostic image writers: mask overlap, direction, Jacobian, residual maps.

Pure numpy colorization (no plotting dependency); every writer takes a target
path and writes one PNG.
"""
from __future__ import annotations

import math

import numpy as np
from PIL import Image

from .types import TissueMask


def save_mask_png(mask: TissueMask, path) -> None:
    """1-bit PNG, tissue white."""
    Image.fromarray(mask.bits.astype(bool)).save(path)


def save_overlap_png(mask_fixed: TissueMask, mask_registered: TissueMask, path) -> None:
    """RGB overlap: fixed mask red, registered mask green, agreement yellow."""
    h, w = mask_fixed.bits.shape
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    rgb[:, :, 0] = mask_fixed.bits * 255
    rgb[:, :, 1] = mask_registered.bits * 255
    Image.fromarray(rgb).save(path)


def _hot_colormap(norm: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white ramp over [0, 1]."""
    v = np.clip(norm, 0.0, 1.0)
    r = np.clip(3.0 * v, 0.0, 1.0)
    g = np.clip(3.0 * v - 1.0, 0.0, 1.0)
    b = np.clip(3.0 * v - 2.0, 0.0, 1.0)
    return (np.stack([r, g, b], axis=2) * 255.0 + 0.5).astype(np.uint8)


def save_heatmap_png(values: np.ndarray, path) -> None:
    """Heatmap of a nonnegative scalar grid, normalized to its max."""
    vmax = float(values.max())
    norm = values / vmax if vmax > 0 else np.zeros_like(values)
    Image.fromarray(_hot_colormap(norm)).save(path)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    i = np.floor(h * 6.0).astype(np.int64) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - f * s)
    t = v * (1.0 - (1.0 - f) * s)
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return (np.stack([r, g, b], axis=2) * 255.0 + 0.5).astype(np.uint8)


def save_direction_png(theta: np.ndarray, magnitude: np.ndarray, path) -> None:
    """Angle-as-hue map; pixels with zero displacement stay black."""
    hue = (theta + math.pi) / (2.0 * math.pi)
    hue = np.clip(hue, 0.0, 1.0 - 1e-9)
    sat = np.ones_like(hue)
    val = (magnitude > 0).astype(np.float64)
    Image.fromarray(_hsv_to_rgb(hue, sat, val)).save(path)


def save_jacobian_png(jac: np.ndarray, path) -> None:
    """Diverging map centered at J = 1 (blue shrink, red expand); negative
    determinants (folding) are highlighted in green."""
    delta = jac - 1.0
    scale = max(float(np.abs(delta).max()), 1e-12)
    norm = np.clip(delta / scale, -1.0, 1.0)
    h, w = jac.shape
    rgb = np.empty((h, w, 3), dtype=np.float64)
    rgb[:, :, 0] = np.where(norm >= 0, 1.0, 1.0 + norm)
    rgb[:, :, 1] = 1.0 - np.abs(norm)
    rgb[:, :, 2] = np.where(norm <= 0, 1.0, 1.0 - norm)
    out = (rgb * 255.0 + 0.5).astype(np.uint8)
    folded = jac < 0.0
    out[folded] = (0, 255, 0)
    Image.fromarray(out).save(path)
