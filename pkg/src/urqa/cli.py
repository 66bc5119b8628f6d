"""Command-line front end.

Subcommands:
  eval   score one registered pair and write a JSON report
  batch  score a CSV manifest of pairs with bounded concurrency
  synth  generate synthetic fields/masks for inspection and testing

Exit codes: 0 = pass (all pairs pass in batch mode), 1 = metric failure,
2 = error. URQA_THREADS sets the default batch worker count; URQA_NUMBA=0
forces the pure-numpy kernel backend.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import EvalConfig, load_config
from .errors import UrqaError
from .pipeline import batch_exit_code, load_manifest, run_batch, run_single
from .raster_io import save_deformation_field
from .synth import FIELD_KINDS, SynthSpec, make_field, make_mask_pair
from . import diagnostics

# sentinel: bare --save-* flag means "write next to the report"
_USE_OUT = "__use_out_dir__"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urqa",
        description="Ground-truth-free registration quality assessment for "
                    "registered whole-slide image pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a single registered pair")
    p_eval.add_argument("--fixed", required=True, help="fixed image (PNG/TIFF)")
    p_eval.add_argument("--registered", required=True,
                        help="registered moving image (PNG/TIFF)")
    p_eval.add_argument("--field", required=True,
                        help="deformation field (NPY, (H,W,2) or (2,H,W))")
    p_eval.add_argument("--config", default=None, help="JSON config file")
    p_eval.add_argument("--out", default=".", help="output directory")
    p_eval.add_argument("--pair-id", default=None, help="identifier used in "
                        "report naming (default: fixed image stem)")
    p_eval.add_argument("--save-masks", nargs="?", const=_USE_OUT, default=None,
                        metavar="DIR", help="write tissue masks as 1-bit PNG")
    p_eval.add_argument("--save-overlap", nargs="?", const=_USE_OUT, default=None,
                        metavar="DIR", help="write the RGB mask-overlap image")
    p_eval.add_argument("--save-deform", nargs="?", const=_USE_OUT, default=None,
                        metavar="DIR", help="write magnitude/direction/Jacobian/"
                        "residual maps")

    p_batch = sub.add_parser("batch", help="evaluate a CSV manifest of pairs")
    p_batch.add_argument("--manifest", required=True,
                         help="CSV with header pair_id,fixed,registered,field")
    p_batch.add_argument("--out", required=True, help="output directory")
    p_batch.add_argument("--workers", type=int, default=None,
                         help="concurrent evaluations (default: URQA_THREADS or 4)")
    p_batch.add_argument("--config", default=None, help="JSON config file")

    p_synth = sub.add_parser("synth", help="generate synthetic fields/masks")
    p_synth.add_argument("--kind", required=True,
                         choices=list(FIELD_KINDS) + ["maskpair"])
    p_synth.add_argument("--size", type=int, default=64)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", default=".", help="output directory")
    p_synth.add_argument("--tx", type=float, default=None, help="translation x")
    p_synth.add_argument("--ty", type=float, default=None, help="translation y")
    p_synth.add_argument("--amplitude", type=float, default=None)
    p_synth.add_argument("--wavelength", type=float, default=None)
    p_synth.add_argument("--count", type=int, default=None, help="spike count")
    p_synth.add_argument("--magnitude", type=float, default=None,
                         help="spike magnitude")
    p_synth.add_argument("--matrix", default=None,
                         help="affine matrix a00,a01,a10,a11")
    p_synth.add_argument("--offset", default=None, help="affine offset bx,by")
    p_synth.add_argument("--overlap", type=float, default=0.8,
                         help="target IoU for maskpair")
    return parser


def _load_cfg(path) -> EvalConfig:
    return load_config(path) if path else EvalConfig()


def _resolve_dir(value, out_dir):
    if value is None:
        return None
    return out_dir if value == _USE_OUT else value


def _cmd_eval(args) -> int:
    cfg = _load_cfg(args.config)
    report, report_path = run_single(
        args.fixed, args.registered, args.field, cfg, args.out,
        pair_id=args.pair_id,
        save_masks_dir=_resolve_dir(args.save_masks, args.out),
        save_overlap_dir=_resolve_dir(args.save_overlap, args.out),
        save_deform_dir=_resolve_dir(args.save_deform, args.out))
    t = report.timings_ms
    print(f"{report.provenance['pair_id']}: Q={report.q} grade={report.grade} "
          f"verdict={report.verdict} (M_Q={report.m_q}, D_Q={report.d_q})")
    print(f"report: {report_path}")
    print(f"timings_ms: total={t.get('total_ms', 0.0):.1f} "
          + " ".join(f"{k.removesuffix('_ms')}={v:.1f}"
                     for k, v in t.items()
                     if k.endswith("_ms") and k != "total_ms"))
    if "peak_rss_delta_mb" in t:
        print(f"peak_rss_delta_mb: {t['peak_rss_delta_mb']:.1f}")
    return 0 if report.verdict == "pass" else 1


def _cmd_batch(args) -> int:
    cfg = _load_cfg(args.config)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("URQA_THREADS", "4"))
    entries = load_manifest(args.manifest)
    summary = run_batch(entries, cfg, args.out, workers=workers)
    print(f"evaluated {summary['evaluated']}/{summary['total_pairs']} pairs: "
          f"{summary['pass']} pass, {summary['fail']} fail, "
          f"{summary['errors']} errors")
    print("grades: " + " ".join(f"{g}={n}"
                                for g, n in summary["grade_counts"].items()))
    print(f"summary: {Path(args.out) / 'summary.json'}")
    return batch_exit_code(summary)


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "maskpair":
        mf, mr, achieved = make_mask_pair(args.overlap, args.size)
        diagnostics.save_mask_png(mf, out / "mask_fixed.png")
        diagnostics.save_mask_png(mr, out / "mask_registered.png")
        print(f"maskpair size={args.size} target_iou={args.overlap} "
              f"achieved_iou={achieved:.6f}")
        print(f"wrote {out / 'mask_fixed.png'} and {out / 'mask_registered.png'}")
        return 0

    params = {}
    if args.tx is not None:
        params["tx"] = args.tx
    if args.ty is not None:
        params["ty"] = args.ty
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    if args.wavelength is not None:
        params["wavelength"] = args.wavelength
    if args.count is not None:
        params["count"] = args.count
    if args.magnitude is not None:
        params["magnitude"] = args.magnitude
    if args.matrix is not None:
        vals = [float(v) for v in args.matrix.split(",")]
        if len(vals) != 4:
            raise ValueError("--matrix expects a00,a01,a10,a11")
        params["a"] = [[vals[0], vals[1]], [vals[2], vals[3]]]
    if args.offset is not None:
        vals = [float(v) for v in args.offset.split(",")]
        if len(vals) != 2:
            raise ValueError("--offset expects bx,by")
        params["b"] = (vals[0], vals[1])

    spec = SynthSpec(kind=args.kind, size=args.size, params=params,
                     seed=args.seed)
    field = make_field(spec)
    path = out / f"{args.kind}_{args.size}_{args.seed}.npy"
    save_deformation_field(field, path)
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"eval": _cmd_eval, "batch": _cmd_batch, "synth": _cmd_synth}
    try:
        return handlers[args.command](args)
    except (UrqaError, OSError, ValueError) as exc:
        print(f"urqa {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
