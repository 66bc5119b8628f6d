"""Independent reference implementations used to check the production code.

Everything here restates the metric definitions, deliberately by a different
route than the library (per-threshold brute force instead of cumulative sums,
sort-and-interpolate instead of np.percentile, and so on).
"""
from __future__ import annotations

import math

import numpy as np


def otsu_brute_force(pixels: np.ndarray) -> int:
    """Exhaustive between-class-variance argmax over thresholds 0..254.

    Dark class is v <= t. Ties keep the smallest threshold.
    """
    v = pixels.ravel().astype(np.float64)
    n = v.size
    best_var = -1.0
    best_t = 0
    for t in range(255):
        lo = v[v <= t]
        hi = v[v > t]
        if lo.size == 0 or hi.size == 0:
            var = 0.0
        else:
            w0 = lo.size / n
            w1 = hi.size / n
            d = float(lo.mean()) - float(hi.mean())
            var = w0 * w1 * d * d
        if var > best_var:
            best_var = var
            best_t = t
    return best_t


def pearson_direct(hf: np.ndarray, hr: np.ndarray) -> float:
    df = hf - hf.mean()
    dr = hr - hr.mean()
    denom = math.sqrt(float((df ** 2).sum())) * math.sqrt(float((dr ** 2).sum()))
    if denom == 0.0:
        return 0.0
    return float((df * dr).sum()) / denom


def overlap_direct(hf: np.ndarray, hr: np.ndarray) -> float:
    return float(sum(min(a, b) for a, b in zip(hf.tolist(), hr.tolist())))


def cosine_direct(hf: np.ndarray, hr: np.ndarray) -> float:
    denom = math.sqrt(float((hf ** 2).sum())) * math.sqrt(float((hr ** 2).sum()))
    if denom == 0.0:
        return 0.0
    return float((hf * hr).sum()) / denom


def percentile_linear(values: np.ndarray, p: float) -> float:
    """Sort-and-interpolate percentile with rank = p/100 * (n - 1)."""
    s = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if s.size == 1:
        return float(s[0])
    rank = p / 100.0 * (s.size - 1)
    lo = int(math.floor(rank))
    hi = min(lo + 1, s.size - 1)
    frac = rank - lo
    return float(s[lo] + frac * (s[hi] - s[lo]))


def iqr_reference(values: np.ndarray) -> float:
    return percentile_linear(values, 80.0) - percentile_linear(values, 30.0)


def mq_reference(iou: float, mae: float, hc: float) -> int:
    """Tier table written out literally, independent of the library."""
    if iou >= 0.80 and mae <= 0.07 and hc >= 0.80:
        return 3
    if iou >= 0.70 and mae <= 0.10 and hc >= 0.70:
        return 2
    if iou >= 0.64 and mae <= 0.11 and hc >= 0.64:
        return 1
    return 0


def dq_reference(criteria) -> int:
    return {5: 3, 4: 2, 3: 1}.get(sum(bool(c) for c in criteria), 0)


def unify_reference(m_q: int, d_q: int) -> int:
    return 0 if (m_q == 0 or d_q == 0) else max(m_q, d_q)


def affine_jacobian(a: np.ndarray) -> float:
    """Analytic det(I + A) for a field u = A x + b."""
    return float(np.linalg.det(np.eye(2) + np.asarray(a, dtype=np.float64)))
