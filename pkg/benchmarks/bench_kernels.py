"""Benchmark the numba kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeats N] [--pipeline]

--pipeline additionally times a full single-pair CLI evaluation under both
backends (two subprocesses, URQA_NUMBA=1/0), reporting the stage totals.
"""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from urqa import kernels
from urqa.deform_metrics import gaussian_weights


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) * 1000.0


def build_cases():
    rng = np.random.default_rng(0)
    big = rng.uniform(0, 255, size=(2048, 2048))
    hist = rng.integers(0, 5000, size=256).astype(np.int64)
    mask = (rng.random((512, 512)) < 0.45).astype(np.uint8)
    blob_mask = np.zeros((512, 512), dtype=np.uint8)
    for _ in range(60):
        y, x = rng.integers(0, 480, 2)
        h, w = rng.integers(2, 30, 2)
        blob_mask[y:y + h, x:x + w] = 1
    field = rng.normal(scale=2.0, size=(512, 512))
    field2 = rng.normal(scale=2.0, size=(512, 512))
    weights = gaussian_weights(2.0)
    return [
        ("area_resize 2048->512", (big, 512, 512),
         kernels.area_resize_numpy,
         getattr(kernels, "area_resize_numba", None)),
        ("otsu_argmax 256 bins", (hist,),
         kernels.otsu_argmax_numpy,
         getattr(kernels, "otsu_argmax_numba", None)),
        ("dilate3 512x512", (mask,),
         kernels.dilate3_numpy,
         getattr(kernels, "dilate3_numba", None)),
        ("erode3 512x512", (mask,),
         kernels.erode3_numpy,
         getattr(kernels, "erode3_numba", None)),
        ("filter_components 512x512", (blob_mask, 131),
         kernels.filter_small_components_numpy,
         getattr(kernels, "filter_small_components_numba", None)),
        ("gaussian_blur 512x512", (field, weights),
         kernels.gaussian_blur_numpy,
         getattr(kernels, "gaussian_blur_numba", None)),
        ("jacobian_det 512x512", (field, field2),
         kernels.jacobian_det_numpy,
         getattr(kernels, "jacobian_det_numba", None)),
    ]


def bench_kernels(repeats):
    print("=" * 72)
    print(f"kernel backends: numba available = {kernels.HAVE_NUMBA}, "
          f"active = {kernels.BACKEND}")
    print("=" * 72)
    print(f"{'kernel':<28} {'numpy ms':>10} {'numba ms':>10} {'speedup':>9}")
    print("-" * 72)
    for name, args, fn_np, fn_nb in build_cases():
        np_ms = median_time(lambda: fn_np(*args), repeats)
        if fn_nb is None:
            print(f"{name:<28} {np_ms:>10.2f} {'n/a':>10} {'n/a':>9}")
            continue
        fn_nb(*args)  # compile/load outside the timed region
        nb_ms = median_time(lambda: fn_nb(*args), repeats)
        print(f"{name:<28} {np_ms:>10.2f} {nb_ms:>10.2f} {np_ms / nb_ms:>8.1f}x")
    print("=" * 72)


def bench_pipeline():
    from PIL import Image

    from urqa.raster_io import save_deformation_field
    from urqa.synth import SynthSpec, make_field

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        rng = np.random.default_rng(1)
        img = np.full((1024, 1024, 3), 245, dtype=np.uint8)
        yy, xx = np.mgrid[0:1024, 0:1024]
        blob = ((yy - 512) ** 2 + (xx - 480) ** 2) < 350 ** 2
        tex = rng.integers(50, 170, size=(1024, 1024, 3)).astype(np.uint8)
        img[blob] = tex[blob]
        Image.fromarray(img).save(tmp / "fixed.png")
        Image.fromarray(img).save(tmp / "registered.png")
        save_deformation_field(make_field(SynthSpec(kind="smooth_elastic",
                                                    size=256, seed=1)),
                               tmp / "field.npy")
        print(f"{'backend':<10} {'total ms':>10}  stage breakdown")
        print("-" * 72)
        for backend, flag in (("numba", "1"), ("numpy", "0")):
            env = dict(os.environ, URQA_NUMBA=flag)
            out = tmp / f"out_{backend}"
            for attempt in range(2):  # second run measures warm JIT cache
                subprocess.run(
                    [sys.executable, "-m", "urqa", "eval",
                     "--fixed", str(tmp / "fixed.png"),
                     "--registered", str(tmp / "registered.png"),
                     "--field", str(tmp / "field.npy"), "--out", str(out)],
                    check=True, capture_output=True, env=env)
            timings = json.loads((out / "report.json").read_text())["timings_ms"]
            stages = " ".join(f"{k.removesuffix('_ms')}={v:.0f}"
                              for k, v in timings.items()
                              if k.endswith("_ms") and k != "total_ms")
            print(f"{backend:<10} {timings['total_ms']:>10.1f}  {stages}")
    print("=" * 72)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--pipeline", action="store_true",
                        help="also time the full CLI under both backends")
    args = parser.parse_args()
    bench_kernels(args.repeats)
    if args.pipeline:
        bench_pipeline()


if __name__ == "__main__":
    main()
