"""Mask-geometry metrics and the tiered mask score.

IoU and MAE compare the binary masks; the histogram-correlation triple
(Pearson, overlap, cosine) compares intensity distributions restricted to
tissue pixels. The mask score tests tiers 3 -> 2 -> 1, each requiring all
three of its thresholds, and falls through to 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .types import RasterImage, TissueMask

# (score, min IoU, max MAE, min HC), tested in order
SCORE_TIERS = (
    (3, 0.80, 0.07, 0.80),
    (2, 0.70, 0.10, 0.70),
    (1, 0.64, 0.11, 0.64),
)


@dataclass
class MaskMetrics:
    iou: float
    mae: float
    hc_corr: float
    hc_overlap: float
    hc_cos: float
    hc: float
    m_q: int
    # pair tag for consistency checks; not serialized, ignored by equality
    source: str | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {"iou": self.iou, "mae": self.mae, "hc_corr": self.hc_corr,
                "hc_overlap": self.hc_overlap, "hc_cos": self.hc_cos,
                "hc": self.hc, "m_q": self.m_q}

    @classmethod
    def from_dict(cls, d: dict) -> "MaskMetrics":
        return cls(iou=d["iou"], mae=d["mae"], hc_corr=d["hc_corr"],
                   hc_overlap=d["hc_overlap"], hc_cos=d["hc_cos"],
                   hc=d["hc"], m_q=d["m_q"])


def _check_dims(a, b, what: str):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{what}: {a.shape} vs {b.shape}")


def iou(mf: TissueMask, mr: TissueMask) -> float:
    """Intersection over union; both masks empty counts as full agreement."""
    _check_dims(mf.bits, mr.bits, "iou")
    inter = int(np.count_nonzero(mf.bits & mr.bits))
    union = int(np.count_nonzero(mf.bits | mr.bits))
    if union == 0:
        return 1.0
    return inter / union


def mask_mae(mf: TissueMask, mr: TissueMask) -> float:
    """Mean absolute difference of the binary masks (disagreement fraction)."""
    _check_dims(mf.bits, mr.bits, "mask_mae")
    return float(np.count_nonzero(mf.bits != mr.bits)) / mf.bits.size


def histogram(image: RasterImage, mask: TissueMask, bins: int) -> tuple[np.ndarray, bool]:
    """Normalized intensity histogram over tissue pixels.

    Returns (histogram, degenerate); an empty mask yields a uniform histogram
    flagged degenerate so downstream comparisons stay defined.
    """
    if image.channels != 1:
        raise ValueError("histogram expects a grayscale image")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    _check_dims(image.pixels, mask.bits, "histogram")
    values = image.pixels[mask.bits.astype(bool)]
    if values.size == 0:
        return np.full(bins, 1.0 / bins, dtype=np.float64), True
    idx = (values.astype(np.int64) * bins) // 256
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return counts / values.size, False


def hc_triple(hf: np.ndarray, hr: np.ndarray) -> tuple[float, float, float, float]:
    """(Pearson, overlap, cosine, max of the three) for two normalized
    histograms. Pearson is 0 when either side has zero variance; cosine is 0
    when either norm is 0.
    """
    hf = np.asarray(hf, dtype=np.float64)
    hr = np.asarray(hr, dtype=np.float64)
    if hf.shape != hr.shape:
        raise DimensionMismatchError(f"hc_triple: {hf.shape} vs {hr.shape}")
    for h in (hf, hr):
        if abs(float(h.sum()) - 1.0) > 1e-9:
            raise ValueError("histograms must be normalized to sum 1")

    df = hf - hf.mean()
    dr = hr - hr.mean()
    denom_sq = float(np.dot(df, df)) * float(np.dot(dr, dr))
    corr = float(np.dot(df, dr)) / math.sqrt(denom_sq) if denom_sq > 0 else 0.0

    overlap = float(np.minimum(hf, hr).sum())

    norm_sq = float(np.dot(hf, hf)) * float(np.dot(hr, hr))
    cos = float(np.dot(hf, hr)) / math.sqrt(norm_sq) if norm_sq > 0 else 0.0

    return corr, overlap, cos, max(corr, overlap, cos)


def score_mrqa(iou_value: float, mae_value: float, hc_value: float) -> int:
    """Tiered mask score in {0..3}; tiers tested best-first, 0 by default."""
    for score, iou_min, mae_max, hc_min in SCORE_TIERS:
        if iou_value >= iou_min and mae_value <= mae_max and hc_value >= hc_min:
            return score
    return 0


def compute_mask_metrics(gray_fixed: RasterImage, mask_fixed: TissueMask,
                         gray_registered: RasterImage, mask_registered: TissueMask,
                         bins: int = 256, source: str | None = None,
                         ) -> tuple[MaskMetrics, dict]:
    """Full MRQA evaluation of one pair; also returns degenerate-input flags."""
    iou_value = iou(mask_fixed, mask_registered)
    mae_value = mask_mae(mask_fixed, mask_registered)
    hf, degen_f = histogram(gray_fixed, mask_fixed, bins)
    hr, degen_r = histogram(gray_registered, mask_registered, bins)
    corr, overlap, cos, hc = hc_triple(hf, hr)
    metrics = MaskMetrics(iou=iou_value, mae=mae_value, hc_corr=corr,
                          hc_overlap=overlap, hc_cos=cos, hc=hc,
                          m_q=score_mrqa(iou_value, mae_value, hc),
                          source=source)
    flags = {"mask_fixed_degenerate": mask_fixed.degenerate,
             "mask_registered_degenerate": mask_registered.degenerate,
             "hist_fixed_degenerate": degen_f,
             "hist_registered_degenerate": degen_r}
    return metrics, flags
