"""Deformation-field plausibility metrics and the tiered deformation score.

Five criteria are evaluated: magnitude spread (std vs interquartile range),
direction spread, Jacobian-determinant regularity, and the mean and std of
the Gaussian smoothness residual. Each satisfied criterion contributes one
point; 5 -> score 3, 4 -> 2, 3 -> 1, fewer -> 0.

The quantile range used throughout is Q80 - Q30 with linear interpolation,
and standard deviations are population (ddof=0). Strict "<" comparisons carry
an epsilon slack so the exact identity field (std = range = 0) passes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import EvalConfig
from .errors import EmptyInputError, FieldTooSmallError
from .types import DeformationField


@dataclass
class DeformMetrics:
    mag_mean: float
    mag_std: float
    mag_iqr: float
    dir_std: float
    dir_iqr: float
    jac_mean: float
    jac_std: float
    jac_neg_fraction: float
    s_j: int
    resid_mean: float
    resid_std: float
    resid_iqr: float
    crit_magnitude: bool
    crit_direction: bool
    crit_jacobian: bool
    crit_resid_mean: bool
    crit_resid_std: bool
    d_q: int
    # pair tag for consistency checks; not serialized, ignored by equality
    source: str | None = field(default=None, compare=False)

    @property
    def criteria(self) -> tuple[bool, bool, bool, bool, bool]:
        return (self.crit_magnitude, self.crit_direction, self.crit_jacobian,
                self.crit_resid_mean, self.crit_resid_std)

    def to_dict(self) -> dict:
        return {"mag_mean": self.mag_mean, "mag_std": self.mag_std,
                "mag_iqr": self.mag_iqr, "dir_std": self.dir_std,
                "dir_iqr": self.dir_iqr, "jac_mean": self.jac_mean,
                "jac_std": self.jac_std, "jac_neg_fraction": self.jac_neg_fraction,
                "s_j": self.s_j, "resid_mean": self.resid_mean,
                "resid_std": self.resid_std, "resid_iqr": self.resid_iqr,
                "criteria": {"magnitude": self.crit_magnitude,
                             "direction": self.crit_direction,
                             "jacobian": self.crit_jacobian,
                             "resid_mean": self.crit_resid_mean,
                             "resid_std": self.crit_resid_std},
                "d_q": self.d_q}

    @classmethod
    def from_dict(cls, d: dict) -> "DeformMetrics":
        c = d["criteria"]
        return cls(mag_mean=d["mag_mean"], mag_std=d["mag_std"],
                   mag_iqr=d["mag_iqr"], dir_std=d["dir_std"],
                   dir_iqr=d["dir_iqr"], jac_mean=d["jac_mean"],
                   jac_std=d["jac_std"], jac_neg_fraction=d["jac_neg_fraction"],
                   s_j=d["s_j"], resid_mean=d["resid_mean"],
                   resid_std=d["resid_std"], resid_iqr=d["resid_iqr"],
                   crit_magnitude=c["magnitude"], crit_direction=c["direction"],
                   crit_jacobian=c["jacobian"], crit_resid_mean=c["resid_mean"],
                   crit_resid_std=c["resid_std"], d_q=d["d_q"])


def magnitude_direction(field: DeformationField) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel displacement magnitude and four-quadrant angle in (-pi, pi].

    Zero-displacement pixels get angle 0.
    """
    mag = np.hypot(field.ux, field.uy)
    theta = np.arctan2(field.uy, field.ux)
    theta[mag == 0.0] = 0.0
    theta[theta == -math.pi] = math.pi  # negative-zero uy lands on -pi
    return mag, theta


def iqr(values: np.ndarray) -> float:
    """Q80 - Q30 with linear interpolation between order statistics."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("iqr of an empty grid")
    q80, q30 = np.percentile(values, [80.0, 30.0])
    return float(q80 - q30)


def _spread_criterion(values: np.ndarray, epsilon: float) -> tuple[bool, float, float]:
    sigma = float(np.std(values))
    rng = iqr(values)
    return sigma < rng + epsilon, sigma, rng


def magnitude_criterion(mag: np.ndarray, cfg: EvalConfig) -> bool:
    ok, _, _ = _spread_criterion(mag, cfg.epsilon)
    return ok


def _recenter_angles(theta: np.ndarray) -> np.ndarray:
    """Angles re-expressed relative to the circular mean, wrapped to (-pi, pi]."""
    mean_angle = math.atan2(float(np.sin(theta).mean()), float(np.cos(theta).mean()))
    d = theta - mean_angle
    d = np.mod(d + math.pi, 2.0 * math.pi) - math.pi
    d[d == -math.pi] = math.pi
    return d


def direction_criterion(theta: np.ndarray, cfg: EvalConfig) -> bool:
    if cfg.circular_direction:
        theta = _recenter_angles(theta)
    ok, _, _ = _spread_criterion(theta, cfg.epsilon)
    return ok


def jacobian_determinant(field: DeformationField) -> np.ndarray:
    """det of the transform gradient: central differences at interior pixels,
    one-sided at borders, unit grid spacing."""
    if field.height < 3 or field.width < 3:
        raise FieldTooSmallError(
            f"field {field.height}x{field.width} too small for finite differences")
    return kernels.jacobian_det(field.ux, field.uy)


def jacobian_score(jac: np.ndarray, cfg: EvalConfig) -> tuple[int, float, float, float]:
    """Cumulative Jacobian check: mean near 1, std bounded, folding bounded.

    Returns (score in {0,1}, mean, std, negative fraction); score is 1 when
    at least 2 of the 3 conditions hold.
    """
    mean = float(jac.mean())
    std = float(np.std(jac))
    neg_fraction = float(np.count_nonzero(jac < 0.0)) / jac.size
    conds = (abs(mean - 1.0) <= cfg.jacobian_mean_tol,
             std < cfg.jacobian_std_max,
             neg_fraction < cfg.folding_max_fraction)
    s_j = 1 if sum(conds) >= 2 else 0
    return s_j, mean, std, neg_fraction


def gaussian_weights(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(4 sigma)."""
    radius = int(math.ceil(4.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return w / w.sum()


def smoothness_residual(field: DeformationField, cfg: EvalConfig,
                        ) -> tuple[np.ndarray, float, float, float]:
    """Residual magnitude between the field and its Gaussian-smoothed version.

    Returns (residual grid, mean, std, Q80-Q30 range).
    """
    w = gaussian_weights(cfg.gaussian_sigma)
    rx = field.ux - kernels.gaussian_blur(field.ux, w)
    ry = field.uy - kernels.gaussian_blur(field.uy, w)
    resid = np.hypot(rx, ry)
    return resid, float(resid.mean()), float(np.std(resid)), iqr(resid)


def residual_criteria(resid_mean: float, resid_std: float, resid_iqr: float,
                      cfg: EvalConfig) -> tuple[bool, bool]:
    return (resid_mean < resid_iqr + cfg.epsilon,
            resid_std < resid_iqr + cfg.epsilon)


def score_drqa(criteria) -> int:
    """Criterion count to score: 5 -> 3, 4 -> 2, 3 -> 1, otherwise 0."""
    satisfied = sum(bool(c) for c in criteria)
    if satisfied == 5:
        return 3
    if satisfied == 4:
        return 2
    if satisfied == 3:
        return 1
    return 0


def compute_deform_metrics(field: DeformationField, cfg: EvalConfig,
                           source: str | None = None) -> DeformMetrics:
    """Full DRQA evaluation of one deformation field at native resolution."""
    mag, theta = magnitude_direction(field)
    mag_ok, mag_std, mag_iqr = _spread_criterion(mag, cfg.epsilon)
    dir_values = _recenter_angles(theta) if cfg.circular_direction else theta
    dir_ok, dir_std, dir_iqr = _spread_criterion(dir_values, cfg.epsilon)

    jac = jacobian_determinant(field)
    s_j, jac_mean, jac_std, neg_fraction = jacobian_score(jac, cfg)

    _, resid_mean, resid_std, resid_iqr = smoothness_residual(field, cfg)
    rmean_ok, rstd_ok = residual_criteria(resid_mean, resid_std, resid_iqr, cfg)

    criteria = (mag_ok, dir_ok, s_j == 1, rmean_ok, rstd_ok)
    return DeformMetrics(mag_mean=float(mag.mean()), mag_std=mag_std,
                         mag_iqr=mag_iqr, dir_std=dir_std, dir_iqr=dir_iqr,
                         jac_mean=jac_mean, jac_std=jac_std,
                         jac_neg_fraction=neg_fraction, s_j=s_j,
                         resid_mean=resid_mean, resid_std=resid_std,
                         resid_iqr=resid_iqr,
                         crit_magnitude=criteria[0], crit_direction=criteria[1],
                         crit_jacobian=criteria[2], crit_resid_mean=criteria[3],
                         crit_resid_std=criteria[4],
                         d_q=score_drqa(criteria), source=source)
