"""End-to-end evaluation of registered pairs, single or batched.

A pair is (fixed image, registered moving image, deformation field). Images
are brought to a common evaluation resolution, masked, and scored; the field
is scored at its native resolution. Batch entries are isolated: one corrupt
input produces an error record, never an aborted batch, and results are
independent of worker count and manifest order.
"""
from __future__ import annotations

import csv
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import diagnostics, kernels
from .config import EvalConfig
from .deform_metrics import (compute_deform_metrics, jacobian_determinant,
                             magnitude_direction, smoothness_residual)
from .errors import DimensionMismatchError
from .mask_gen import generate_mask
from .mask_metrics import compute_mask_metrics
from .raster_io import (_resize_image, downsample_to_eval, eval_dimensions,
                        load_deformation_field, load_image, to_grayscale,
                        write_report)
from .score_fusion import GRADES, QualityReport, assemble_report

# registered may differ from fixed by at most this much at eval scale before
# the discrepancy is an error rather than a rounding artifact
MAX_DIM_SLACK_PX = 2


def _proc_status_kb(key: str) -> int | None:
    try:
        with open("/proc/self/status", "r", encoding="ascii") as fh:
            for line in fh:
                if line.startswith(key + ":"):
                    return int(line.split()[1])
    except (OSError, ValueError, IndexError):
        return None
    return None


def _peak_rss_kb() -> int | None:
    kb = _proc_status_kb("VmHWM")
    if kb is not None:
        return kb
    try:
        import resource

        return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    except (ImportError, OSError):
        return None


def evaluate_pair(fixed_path, registered_path, field_path, cfg: EvalConfig,
                  pair_id: str | None = None,
                  save_masks_dir=None, save_overlap_dir=None,
                  save_deform_dir=None, measure_memory: bool = False,
                  ) -> QualityReport:
    """Run the full scoring pipeline on one pair and return the report."""
    tag = pair_id or Path(fixed_path).stem
    timings: dict = {}
    rss_before_kb = _proc_status_kb("VmRSS") if measure_memory else None
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    fixed = load_image(fixed_path)
    registered = load_image(registered_path)
    field = load_deformation_field(field_path)
    timings["load_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    fixed_eval = downsample_to_eval(fixed, cfg.max_eval_size)
    reg_h, reg_w = eval_dimensions(registered.height, registered.width,
                                   cfg.max_eval_size)
    if (abs(reg_h - fixed_eval.height) > MAX_DIM_SLACK_PX
            or abs(reg_w - fixed_eval.width) > MAX_DIM_SLACK_PX):
        raise DimensionMismatchError(
            f"{tag}: registered evaluates to {reg_w}x{reg_h}, fixed to "
            f"{fixed_eval.width}x{fixed_eval.height} (beyond rounding slack)")
    registered_eval = _resize_image(registered, fixed_eval.height, fixed_eval.width)
    gray_fixed = to_grayscale(fixed_eval)
    gray_registered = to_grayscale(registered_eval)
    timings["preprocess_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    mask_fixed = generate_mask(gray_fixed, tissue_is_dark=cfg.tissue_is_dark,
                               min_component_fraction=cfg.min_component_fraction)
    mask_registered = generate_mask(gray_registered,
                                    tissue_is_dark=cfg.tissue_is_dark,
                                    min_component_fraction=cfg.min_component_fraction)
    timings["mask_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    mask_metrics, degen_flags = compute_mask_metrics(
        gray_fixed, mask_fixed, gray_registered, mask_registered,
        bins=cfg.histogram_bins, source=tag)
    timings["mask_metrics_ms"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    deform_metrics = compute_deform_metrics(field, cfg, source=tag)
    timings["deform_metrics_ms"] = (time.perf_counter() - t0) * 1000.0

    provenance = {
        "pair_id": tag,
        "fixed_path": str(fixed_path),
        "registered_path": str(registered_path),
        "field_path": str(field_path),
        "eval_width": fixed_eval.width,
        "eval_height": fixed_eval.height,
        "field_width": field.width,
        "field_height": field.height,
        "otsu_threshold_fixed": mask_fixed.otsu_threshold,
        "otsu_threshold_registered": mask_registered.otsu_threshold,
        "degenerate_flags": degen_flags,
        "kernel_backend": kernels.BACKEND,
    }

    if save_masks_dir is not None:
        d = Path(save_masks_dir)
        d.mkdir(parents=True, exist_ok=True)
        diagnostics.save_mask_png(mask_fixed, d / f"{tag}_mask_fixed.png")
        diagnostics.save_mask_png(mask_registered, d / f"{tag}_mask_registered.png")
    if save_overlap_dir is not None:
        d = Path(save_overlap_dir)
        d.mkdir(parents=True, exist_ok=True)
        diagnostics.save_overlap_png(mask_fixed, mask_registered,
                                     d / f"{tag}_overlap.png")
    if save_deform_dir is not None:
        d = Path(save_deform_dir)
        d.mkdir(parents=True, exist_ok=True)
        mag, theta = magnitude_direction(field)
        jac = jacobian_determinant(field)
        resid, _, _, _ = smoothness_residual(field, cfg)
        diagnostics.save_heatmap_png(mag, d / f"{tag}_magnitude.png")
        diagnostics.save_direction_png(theta, mag, d / f"{tag}_direction.png")
        diagnostics.save_jacobian_png(jac, d / f"{tag}_jacobian.png")
        diagnostics.save_heatmap_png(resid, d / f"{tag}_residual.png")

    timings["total_ms"] = (time.perf_counter() - t_total) * 1000.0
    if measure_memory and rss_before_kb is not None:
        peak_kb = _peak_rss_kb()
        if peak_kb is not None:
            timings["peak_rss_delta_mb"] = max(0.0, (peak_kb - rss_before_kb) / 1024.0)

    return assemble_report(mask_metrics, deform_metrics, config=cfg,
                           provenance=provenance, timings_ms=timings)


def run_single(fixed_path, registered_path, field_path, cfg: EvalConfig,
               output_dir, pair_id: str | None = None,
               save_masks_dir=None, save_overlap_dir=None, save_deform_dir=None,
               ) -> tuple[QualityReport, Path]:
    """Evaluate one pair and write its JSON report into output_dir."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = evaluate_pair(fixed_path, registered_path, field_path, cfg,
                           pair_id=pair_id, save_masks_dir=save_masks_dir,
                           save_overlap_dir=save_overlap_dir,
                           save_deform_dir=save_deform_dir,
                           measure_memory=True)
    name = _safe_name(pair_id) + "_report.json" if pair_id else "report.json"
    report_path = out / name
    write_report(report, report_path)
    return report, report_path


# ---------------------------------------------------------------------------
# batch mode
# ---------------------------------------------------------------------------

MANIFEST_COLUMNS = ("pair_id", "fixed", "registered", "field")


@dataclass(frozen=True)
class ManifestEntry:
    pair_id: str
    fixed: str
    registered: str
    field: str


def _safe_name(pair_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", pair_id)


def load_manifest(path) -> list[ManifestEntry]:
    """Parse a CSV manifest with header pair_id,fixed,registered,field."""
    entries: list[ManifestEntry] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(MANIFEST_COLUMNS) <= set(reader.fieldnames):
            raise ValueError(
                f"manifest must have columns {','.join(MANIFEST_COLUMNS)}")
        for row_num, row in enumerate(reader, start=2):
            entry = ManifestEntry(pair_id=(row["pair_id"] or "").strip(),
                                  fixed=(row["fixed"] or "").strip(),
                                  registered=(row["registered"] or "").strip(),
                                  field=(row["field"] or "").strip())
            if not entry.pair_id or not entry.fixed or not entry.registered \
                    or not entry.field:
                raise ValueError(f"manifest line {row_num}: empty field")
            entries.append(entry)
    seen = set()
    for e in entries:
        key = _safe_name(e.pair_id)
        if key in seen:
            raise ValueError(f"duplicate pair_id {e.pair_id!r}")
        seen.add(key)
    return entries


def _evaluate_entry(entry: ManifestEntry, cfg: EvalConfig, out: Path):
    try:
        report = evaluate_pair(entry.fixed, entry.registered, entry.field, cfg,
                               pair_id=entry.pair_id)
        report_path = out / f"{_safe_name(entry.pair_id)}.json"
        write_report(report, report_path)
        return entry.pair_id, report, report_path.name, None
    except Exception as exc:  # per-entry isolation: record, never abort
        return entry.pair_id, None, None, f"{type(exc).__name__}: {exc}"


def run_batch(entries: list[ManifestEntry], cfg: EvalConfig, output_dir,
              workers: int = 4) -> dict:
    """Evaluate every manifest entry, write per-pair reports plus a summary.

    The summary (and every per-pair report) is a pure function of the inputs
    and config; worker count only affects wall time.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = max(1, int(workers))

    if entries:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda e: _evaluate_entry(e, cfg, out), entries))
    else:
        results = []

    grade_counts = {g: 0 for g in GRADES}
    failures: list[str] = []
    error_entries: list[dict] = []
    report_index: dict = {}
    stage_sums: dict = {}
    evaluated = 0
    for pair_id, report, report_name, error in results:
        if error is not None:
            error_entries.append({"pair_id": pair_id, "error": error})
            continue
        evaluated += 1
        grade_counts[report.grade] += 1
        if report.verdict == "fail":
            failures.append(pair_id)
        report_index[pair_id] = report_name
        for stage, ms in report.timings_ms.items():
            stage_sums[stage] = stage_sums.get(stage, 0.0) + ms

    summary = {
        "schema_version": 1,
        "total_pairs": len(entries),
        "evaluated": evaluated,
        "errors": len(error_entries),
        "pass": evaluated - len(failures),
        "fail": len(failures),
        "grade_counts": grade_counts,
        "mean_timings_ms": {stage: total / evaluated
                            for stage, total in sorted(stage_sums.items())}
        if evaluated else {},
        "failures": sorted(failures),
        "error_entries": sorted(error_entries, key=lambda e: e["pair_id"]),
        "reports": {k: report_index[k] for k in sorted(report_index)},
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def batch_exit_code(summary: dict) -> int:
    if summary["errors"] > 0:
        return 2
    if summary["fail"] > 0:
        return 1
    return 0
