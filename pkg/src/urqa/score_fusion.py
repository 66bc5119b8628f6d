"""Unified quality score and report assembly.

The unified score is hierarchical: a failure (0) in either the mask score or
the deformation score rejects the pair outright; otherwise the better of the
two scores wins. Reports embed every raw metric, the full configuration, and
provenance so a grade can always be audited.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import EvalConfig
from .deform_metrics import DeformMetrics
from .errors import InconsistentInputsError
from .mask_metrics import MaskMetrics

GRADES = ("poor", "fair", "good", "excellent")
SCHEMA_VERSION = 1


def unify(m_q: int, d_q: int) -> int:
    """0 if either module scored 0, else max(m_q, d_q)."""
    for v in (m_q, d_q):
        if v not in (0, 1, 2, 3):
            raise ValueError(f"scores must be in 0..3, got {v}")
    if m_q == 0 or d_q == 0:
        return 0
    return max(m_q, d_q)


@dataclass
class QualityReport:
    m_q: int
    d_q: int
    q: int
    grade: str
    verdict: str
    mask_metrics: MaskMetrics
    deform_metrics: DeformMetrics
    config: EvalConfig
    provenance: dict = field(default_factory=dict)
    timings_ms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION,
                "m_q": self.m_q, "d_q": self.d_q,
                "unified_score": self.q,
                "grade": self.grade, "verdict": self.verdict,
                "mask_metrics": self.mask_metrics.to_dict(),
                "deform_metrics": self.deform_metrics.to_dict(),
                "config": self.config.to_dict(),
                "provenance": self.provenance,
                "timings_ms": self.timings_ms}

    @classmethod
    def from_dict(cls, d: dict) -> "QualityReport":
        return cls(m_q=d["m_q"], d_q=d["d_q"], q=d["unified_score"],
                   grade=d["grade"], verdict=d["verdict"],
                   mask_metrics=MaskMetrics.from_dict(d["mask_metrics"]),
                   deform_metrics=DeformMetrics.from_dict(d["deform_metrics"]),
                   config=EvalConfig.from_dict(d["config"]),
                   provenance=d.get("provenance", {}),
                   timings_ms=d.get("timings_ms", {}))


def assemble_report(mask_metrics: MaskMetrics, deform_metrics: DeformMetrics,
                    config: EvalConfig, provenance: dict | None = None,
                    timings_ms: dict | None = None) -> QualityReport:
    """Fuse the two metric sets into a graded report.

    Raises InconsistentInputsError when both metric sets carry pair tags and
    the tags disagree.
    """
    if (mask_metrics.source is not None and deform_metrics.source is not None
            and mask_metrics.source != deform_metrics.source):
        raise InconsistentInputsError(
            f"metric sets come from different pairs: "
            f"{mask_metrics.source!r} vs {deform_metrics.source!r}")
    q = unify(mask_metrics.m_q, deform_metrics.d_q)
    return QualityReport(m_q=mask_metrics.m_q, d_q=deform_metrics.d_q, q=q,
                         grade=GRADES[q],
                         verdict="pass" if q >= 1 else "fail",
                         mask_metrics=mask_metrics,
                         deform_metrics=deform_metrics,
                         config=config,
                         provenance=provenance or {},
                         timings_ms=timings_ms or {})
