"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a numba ``@njit`` version (``*_numba``) and a pure
numpy version (``*_numpy``). The module-level public names dispatch to one
backend, chosen at import time:

* ``URQA_NUMBA=0`` (or ``false``/``no``/``off``) forces the numpy path and
  skips importing numba entirely;
* otherwise numba is used when importable, numpy when not.

Both implementations of a kernel compute the same quantity with the same
accumulation order wherever bitwise agreement is cheap to keep (Otsu,
Jacobian, Gaussian); the area resampler differs only by float rounding noise.
``benchmarks/bench_kernels.py`` times the two paths against each other.
"""
from __future__ import annotations

import math
import os

import numpy as np

_flag = os.environ.get("URQA_NUMBA", "").strip().lower()
_numba_wanted = _flag not in ("0", "false", "no", "off")

HAVE_NUMBA = False
if _numba_wanted:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via URQA_NUMBA=0 runs
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_wanted
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# area (box) resampling
# ---------------------------------------------------------------------------

def area_resize_numpy(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact box-average resample of a 2-D float64 grid.

    Uses the integral image: the mean over a fractional box is a bilinear
    combination of four integral samples, which is exact for piecewise
    constant input.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    in_h, in_w = src.shape
    if (out_h, out_w) == (in_h, in_w):
        return src.copy()
    integral = np.zeros((in_h + 1, in_w + 1), dtype=np.float64)
    np.cumsum(src, axis=0, out=integral[1:, 1:])
    np.cumsum(integral[1:, 1:], axis=1, out=integral[1:, 1:])

    yb = np.arange(out_h + 1, dtype=np.float64) * in_h / out_h
    xb = np.arange(out_w + 1, dtype=np.float64) * in_w / out_w
    yi = np.minimum(yb.astype(np.int64), in_h - 1)
    xi = np.minimum(xb.astype(np.int64), in_w - 1)
    fy = (yb - yi)[:, None]
    fx = (xb - xi)[None, :]
    s00 = integral[yi][:, xi]
    s01 = integral[yi][:, xi + 1]
    s10 = integral[yi + 1][:, xi]
    s11 = integral[yi + 1][:, xi + 1]
    corner = (1.0 - fy) * (1.0 - fx) * s00 + (1.0 - fy) * fx * s01 \
        + fy * (1.0 - fx) * s10 + fy * fx * s11

    box = corner[1:, 1:] - corner[:-1, 1:] - corner[1:, :-1] + corner[:-1, :-1]
    area = (yb[1:] - yb[:-1])[:, None] * (xb[1:] - xb[:-1])[None, :]
    return box / area


def _area_resize_loops(src, out_h, out_w, out):
    in_h, in_w = src.shape
    for i in range(out_h):
        y0 = (i * in_h) / out_h
        y1 = ((i + 1) * in_h) / out_h
        for j in range(out_w):
            x0 = (j * in_w) / out_w
            x1 = ((j + 1) * in_w) / out_w
            acc = 0.0
            yy = int(math.floor(y0))
            while yy < y1 and yy < in_h:
                wy = min(y1, yy + 1.0) - max(y0, float(yy))
                if wy > 0.0:
                    xx = int(math.floor(x0))
                    while xx < x1 and xx < in_w:
                        wx = min(x1, xx + 1.0) - max(x0, float(xx))
                        if wx > 0.0:
                            acc += wy * wx * src[yy, xx]
                        xx += 1
                yy += 1
            out[i, j] = acc / ((y1 - y0) * (x1 - x0))
    return out


# ---------------------------------------------------------------------------
# Otsu threshold from a 256-bin histogram
# ---------------------------------------------------------------------------

def otsu_argmax_numpy(hist: np.ndarray) -> int:
    """Smallest t in [0, 254] maximizing between-class variance.

    Caller guarantees at least two nonzero bins.
    """
    h = hist.astype(np.float64)
    n = h.sum()
    levels = np.arange(256, dtype=np.float64)
    total = float((h * levels).sum())
    w0 = np.cumsum(h)[:255]
    s0 = np.cumsum(h * levels)[:255]
    w1 = n - w0
    valid = (w0 > 0) & (w1 > 0)
    var = np.zeros(255, dtype=np.float64)
    m0 = np.divide(s0, w0, out=np.zeros(255), where=valid)
    m1 = np.divide(total - s0, w1, out=np.zeros(255), where=valid)
    d = m0 - m1
    var[valid] = (w0 * w1 * d * d)[valid]
    return int(np.argmax(var))


# ---------------------------------------------------------------------------
# 3x3 binary morphology (outside the grid counts as background)
# ---------------------------------------------------------------------------

def dilate3_numpy(mask: np.ndarray) -> np.ndarray:
    p = np.pad(mask, 1)
    out = np.zeros_like(mask)
    for dy in range(3):
        for dx in range(3):
            np.bitwise_or(out, p[dy:dy + mask.shape[0], dx:dx + mask.shape[1]], out=out)
    return out


def erode3_numpy(mask: np.ndarray) -> np.ndarray:
    p = np.pad(mask, 1)
    out = np.ones_like(mask)
    for dy in range(3):
        for dx in range(3):
            np.bitwise_and(out, p[dy:dy + mask.shape[0], dx:dx + mask.shape[1]], out=out)
    return out


# ---------------------------------------------------------------------------
# small connected-component removal (8-connectivity)
# ---------------------------------------------------------------------------

def filter_small_components_numpy(mask: np.ndarray, min_size: int) -> np.ndarray:
    """Zero out components smaller than min_size pixels.

    Min-label propagation with pointer jumping: labels start as flat indices
    and every round each tissue pixel takes the min label over its 8-connected
    tissue neighbors, then labels are compressed by following them twice.
    Converges in O(log diameter) rounds.
    """
    fg = mask.astype(bool)
    if min_size <= 1 or not fg.any():
        return mask.astype(np.uint8).copy()
    h, w = fg.shape
    n = h * w
    lab = np.where(fg, np.arange(n, dtype=np.int64).reshape(h, w), np.int64(n))
    while True:
        p = np.pad(lab, 1, constant_values=n)
        neigh = np.full((h, w), n, dtype=np.int64)
        for dy in range(3):
            for dx in range(3):
                if dy == 1 and dx == 1:
                    continue
                np.minimum(neigh, p[dy:dy + h, dx:dx + w], out=neigh)
        new = np.where(fg, np.minimum(lab, neigh), np.int64(n))
        flat = new.ravel()
        for _ in range(2):
            safe = np.where(flat < n, flat, 0)
            flat = np.where(flat < n, flat[safe], np.int64(n))
        new = flat.reshape(h, w)
        if np.array_equal(new, lab):
            break
        lab = new
    roots = lab[fg]
    counts = np.bincount(roots, minlength=n + 1)
    keep = counts[roots] >= min_size
    out = np.zeros((h, w), dtype=np.uint8)
    out[fg] = keep.astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# separable Gaussian blur with edge replication
# ---------------------------------------------------------------------------

def gaussian_blur_numpy(a: np.ndarray, weights: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    k = weights.shape[0]
    r = k // 2
    h, w = a.shape
    p = np.pad(a, ((r, r), (0, 0)), mode="edge")
    tmp = np.zeros_like(a)
    for i in range(k):
        tmp += weights[i] * p[i:i + h, :]
    p = np.pad(tmp, ((0, 0), (r, r)), mode="edge")
    out = np.zeros_like(a)
    for i in range(k):
        out += weights[i] * p[:, i:i + w]
    return out


# ---------------------------------------------------------------------------
# Jacobian determinant of phi(x) = x + u(x)
# ---------------------------------------------------------------------------

def jacobian_det_numpy(ux: np.ndarray, uy: np.ndarray) -> np.ndarray:
    dux_dx = np.gradient(ux, axis=1)
    dux_dy = np.gradient(ux, axis=0)
    duy_dx = np.gradient(uy, axis=1)
    duy_dy = np.gradient(uy, axis=0)
    return (1.0 + dux_dx) * (1.0 + duy_dy) - dux_dy * duy_dx


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _area_resize_nb(src, out_h, out_w, out):
        in_h, in_w = src.shape
        for i in range(out_h):
            y0 = (i * in_h) / out_h
            y1 = ((i + 1) * in_h) / out_h
            for j in range(out_w):
                x0 = (j * in_w) / out_w
                x1 = ((j + 1) * in_w) / out_w
                acc = 0.0
                yy = int(math.floor(y0))
                while yy < y1 and yy < in_h:
                    wy = min(y1, yy + 1.0) - max(y0, float(yy))
                    if wy > 0.0:
                        xx = int(math.floor(x0))
                        while xx < x1 and xx < in_w:
                            wx = min(x1, xx + 1.0) - max(x0, float(xx))
                            if wx > 0.0:
                                acc += wy * wx * src[yy, xx]
                            xx += 1
                    yy += 1
                out[i, j] = acc / ((y1 - y0) * (x1 - x0))
        return out

    def area_resize_numba(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
        src = np.ascontiguousarray(src, dtype=np.float64)
        if (out_h, out_w) == src.shape:
            return src.copy()
        out = np.empty((out_h, out_w), dtype=np.float64)
        return _area_resize_nb(src, out_h, out_w, out)

    @njit(cache=True, nogil=True)
    def _otsu_argmax_nb(hist):
        n = 0.0
        total = 0.0
        for v in range(256):
            n += hist[v]
            total += hist[v] * v
        w0 = 0.0
        s0 = 0.0
        best = -1.0
        best_t = 0
        for t in range(255):
            w0 += hist[t]
            s0 += hist[t] * t
            w1 = n - w0
            if w0 > 0 and w1 > 0:
                m0 = s0 / w0
                m1 = (total - s0) / w1
                d = m0 - m1
                var = w0 * w1 * d * d
            else:
                var = 0.0
            if var > best:
                best = var
                best_t = t
        return best_t

    def otsu_argmax_numba(hist: np.ndarray) -> int:
        return int(_otsu_argmax_nb(hist.astype(np.float64)))

    @njit(cache=True, nogil=True)
    def _dilate3_nb(mask):
        h, w = mask.shape
        out = np.zeros((h, w), dtype=np.uint8)
        for i in range(h):
            for j in range(w):
                v = 0
                for di in range(-1, 2):
                    for dj in range(-1, 2):
                        y = i + di
                        x = j + dj
                        if 0 <= y < h and 0 <= x < w and mask[y, x]:
                            v = 1
                out[i, j] = v
        return out

    @njit(cache=True, nogil=True)
    def _erode3_nb(mask):
        h, w = mask.shape
        out = np.zeros((h, w), dtype=np.uint8)
        for i in range(h):
            for j in range(w):
                v = 1
                for di in range(-1, 2):
                    for dj in range(-1, 2):
                        y = i + di
                        x = j + dj
                        if not (0 <= y < h and 0 <= x < w and mask[y, x]):
                            v = 0
                out[i, j] = v
        return out

    def dilate3_numba(mask: np.ndarray) -> np.ndarray:
        return _dilate3_nb(np.ascontiguousarray(mask, dtype=np.uint8))

    def erode3_numba(mask: np.ndarray) -> np.ndarray:
        return _erode3_nb(np.ascontiguousarray(mask, dtype=np.uint8))

    @njit(cache=True, nogil=True)
    def _filter_small_nb(mask, min_size):
        h, w = mask.shape
        n = h * w
        parent = np.empty(n, dtype=np.int64)
        for i in range(n):
            parent[i] = i

        # union-find with path halving
        def find(parent, i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(h):
            for j in range(w):
                if mask[i, j] == 0:
                    continue
                idx = i * w + j
                # earlier neighbors under 8-connectivity
                if j > 0 and mask[i, j - 1]:
                    ra = find(parent, idx)
                    rb = find(parent, idx - 1)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
                if i > 0:
                    for dj in range(-1, 2):
                        x = j + dj
                        if 0 <= x < w and mask[i - 1, x]:
                            ra = find(parent, idx)
                            rb = find(parent, (i - 1) * w + x)
                            if ra != rb:
                                parent[max(ra, rb)] = min(ra, rb)

        counts = np.zeros(n, dtype=np.int64)
        for i in range(h):
            for j in range(w):
                if mask[i, j]:
                    counts[find(parent, i * w + j)] += 1
        out = np.zeros((h, w), dtype=np.uint8)
        for i in range(h):
            for j in range(w):
                if mask[i, j] and counts[find(parent, i * w + j)] >= min_size:
                    out[i, j] = 1
        return out

    def filter_small_components_numba(mask: np.ndarray, min_size: int) -> np.ndarray:
        m = np.ascontiguousarray(mask, dtype=np.uint8)
        if min_size <= 1 or not m.any():
            return m.copy()
        return _filter_small_nb(m, min_size)

    @njit(cache=True, nogil=True)
    def _gaussian_blur_nb(a, weights):
        h, w = a.shape
        k = weights.shape[0]
        r = k // 2
        tmp = np.zeros((h, w), dtype=np.float64)
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for t in range(k):
                    y = i + t - r
                    if y < 0:
                        y = 0
                    elif y >= h:
                        y = h - 1
                    acc += weights[t] * a[y, j]
                tmp[i, j] = acc
        out = np.zeros((h, w), dtype=np.float64)
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for t in range(k):
                    x = j + t - r
                    if x < 0:
                        x = 0
                    elif x >= w:
                        x = w - 1
                    acc += weights[t] * tmp[i, x]
                out[i, j] = acc
        return out

    def gaussian_blur_numba(a: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return _gaussian_blur_nb(np.ascontiguousarray(a, dtype=np.float64),
                                 np.ascontiguousarray(weights, dtype=np.float64))

    @njit(cache=True, nogil=True)
    def _jacobian_det_nb(ux, uy):
        h, w = ux.shape
        out = np.empty((h, w), dtype=np.float64)
        for i in range(h):
            for j in range(w):
                if 0 < j < w - 1:
                    dux_dx = (ux[i, j + 1] - ux[i, j - 1]) / 2.0
                    duy_dx = (uy[i, j + 1] - uy[i, j - 1]) / 2.0
                elif j == 0:
                    dux_dx = ux[i, 1] - ux[i, 0]
                    duy_dx = uy[i, 1] - uy[i, 0]
                else:
                    dux_dx = ux[i, w - 1] - ux[i, w - 2]
                    duy_dx = uy[i, w - 1] - uy[i, w - 2]
                if 0 < i < h - 1:
                    dux_dy = (ux[i + 1, j] - ux[i - 1, j]) / 2.0
                    duy_dy = (uy[i + 1, j] - uy[i - 1, j]) / 2.0
                elif i == 0:
                    dux_dy = ux[1, j] - ux[0, j]
                    duy_dy = uy[1, j] - uy[0, j]
                else:
                    dux_dy = ux[h - 1, j] - ux[h - 2, j]
                    duy_dy = uy[h - 1, j] - uy[h - 2, j]
                out[i, j] = (1.0 + dux_dx) * (1.0 + duy_dy) - dux_dy * duy_dx
        return out

    def jacobian_det_numba(ux: np.ndarray, uy: np.ndarray) -> np.ndarray:
        return _jacobian_det_nb(np.ascontiguousarray(ux, dtype=np.float64),
                                np.ascontiguousarray(uy, dtype=np.float64))


if USE_NUMBA:
    area_resize = area_resize_numba
    otsu_argmax = otsu_argmax_numba
    dilate3 = dilate3_numba
    erode3 = erode3_numba
    filter_small_components = filter_small_components_numba
    gaussian_blur = gaussian_blur_numba
    jacobian_det = jacobian_det_numba
else:
    area_resize = area_resize_numpy
    otsu_argmax = otsu_argmax_numpy
    dilate3 = dilate3_numpy
    erode3 = erode3_numpy
    filter_small_components = filter_small_components_numpy
    gaussian_blur = gaussian_blur_numpy
    jacobian_det = jacobian_det_numpy
