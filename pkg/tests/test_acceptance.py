"""Acceptance suite: one test per release criterion, each printing a verdict
line. Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""
import itertools
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from urqa.config import EvalConfig
from urqa.deform_metrics import (compute_deform_metrics, jacobian_determinant,
                                 magnitude_criterion, magnitude_direction,
                                 smoothness_residual, iqr, score_drqa)
from urqa.mask_gen import generate_mask, otsu_threshold
from urqa.mask_metrics import hc_triple, score_mrqa
from urqa.pipeline import evaluate_pair, load_manifest, run_batch
from urqa.raster_io import save_deformation_field
from urqa.score_fusion import unify
from urqa.synth import SynthSpec, make_field
from urqa.types import DeformationField, RasterImage

from .conftest import make_tissue_image, write_pair
from .oracles import (affine_jacobian, cosine_direct, dq_reference,
                      iqr_reference, mq_reference, otsu_brute_force,
                      overlap_direct, pearson_direct, unify_reference)

CFG = EvalConfig()


def _report(number: int, text: str):
    print(f"[acceptance] PASS criterion {number}: {text}")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_mask_score_threshold_fidelity():
    with Timer() as t:
        ious = (0.63, 0.64, 0.70, 0.79, 0.80, 0.85)
        maes = (0.05, 0.07, 0.10, 0.11, 0.12)
        hcs = (0.63, 0.64, 0.70, 0.80, 0.90)
        for i, m, h in itertools.product(ious, maes, hcs):
            assert score_mrqa(i, m, h) == mq_reference(i, m, h), (i, m, h)
    assert t.elapsed < 1.0
    _report(1, f"150-cell boundary grid matches the tier table exactly "
               f"({t.elapsed * 1000:.0f} ms)")


def test_criterion_02_score_table_fidelity():
    with Timer() as t:
        for combo in itertools.product([False, True], repeat=5):
            assert score_drqa(combo) == dq_reference(combo)
        for m, d in itertools.product(range(4), range(4)):
            assert unify(m, d) == unify_reference(m, d)
    assert t.elapsed < 1.0
    _report(2, f"32-case deformation score table and 16-case fusion table "
               f"exact ({t.elapsed * 1000:.0f} ms)")


def test_criterion_03_identity_registration(tmp_path):
    with Timer() as t:
        for seed in (0, 1, 2):
            fixed, registered, field = write_pair(tmp_path, name=f"id{seed}",
                                                  seed=seed, image_size=160,
                                                  field_size=48)
            report = evaluate_pair(fixed, registered, field, CFG)
            assert report.mask_metrics.iou == 1.0
            assert report.mask_metrics.mae == 0.0
            assert report.mask_metrics.hc == 1.0
            assert report.q == 3
            f = make_field(SynthSpec(kind="identity", size=48))
            assert (jacobian_determinant(f) == 1.0).all()
            resid = smoothness_residual(f, CFG)[0]
            assert (resid == 0.0).all()
    assert t.elapsed < 1.0
    _report(3, f"self-pair with zero field: IoU=1, MAE=0, HC=1, J==1, R==0, "
               f"Q=3 exactly ({t.elapsed * 1000:.0f} ms)")


def test_criterion_04_affine_jacobian_oracle():
    with Timer() as t:
        rng = np.random.default_rng(2024)
        matrices = [rng.uniform(-0.15, 0.15, size=(2, 2)) for _ in range(20)]
        # deliberately folded matrices so the detection branch is exercised
        matrices += [np.array([[-2.0, 0.0], [0.0, 0.0]]),
                     np.array([[-1.5, 0.0], [0.0, 0.2]]),
                     np.array([[0.0, 2.0], [1.0, 0.0]])]
        for a in matrices:
            det = affine_jacobian(a)
            f = make_field(SynthSpec(kind="affine", size=40, params={"a": a}))
            jac = jacobian_determinant(f)
            assert np.abs(jac[1:-1, 1:-1] - det).max() <= 1e-9
            metrics = compute_deform_metrics(f, CFG)
            folding_fired = metrics.jac_neg_fraction >= CFG.folding_max_fraction
            assert folding_fired == (det < 0), a
    assert t.elapsed < 5.0
    _report(4, f"20 random + 3 folded affine fields: interior J = det(I+A) "
               f"within 1e-9; folding fires iff det < 0 ({t.elapsed:.2f} s)")


def test_criterion_05_otsu_oracle():
    with Timer() as t:
        rng = np.random.default_rng(5)
        for case in range(100):
            kind = case % 4
            if kind == 0:
                arr = rng.integers(0, 256, (48, 48)).astype(np.uint8)
            elif kind == 1:
                arr = np.clip(np.concatenate([
                    rng.normal(70, 25, 1200), rng.normal(190, 20, 1104)
                ]), 0, 255).astype(np.uint8).reshape(48, 48)
            elif kind == 2:
                levels = rng.choice(256, size=rng.integers(2, 8), replace=False)
                arr = rng.choice(levels, size=(48, 48)).astype(np.uint8)
            else:
                img = make_tissue_image(48, 48, seed=case, rgb=False)
                arr = img.pixels
            got = otsu_threshold(RasterImage(pixels=arr))
            assert got == otsu_brute_force(arr), case
    assert t.elapsed < 5.0
    _report(5, f"100 random images: threshold equals exhaustive "
               f"between-class-variance argmax with identical tie-break "
               f"({t.elapsed:.2f} s)")


def test_criterion_06_histogram_correlation_oracle():
    with Timer() as t:
        rng = np.random.default_rng(6)
        for case in range(100):
            bins = int(rng.integers(2, 257))
            hf = rng.random(bins)
            hr = rng.random(bins)
            if case % 7 == 0:  # sparse supports stress the overlap/cosine
                hf[rng.random(bins) < 0.7] = 0.0
                hr[rng.random(bins) < 0.7] = 0.0
                hf[0] += 1e-9
                hr[-1] += 1e-9
            hf /= hf.sum()
            hr /= hr.sum()
            corr, overlap, cos, hc = hc_triple(hf, hr)
            assert abs(corr - pearson_direct(hf, hr)) <= 1e-12
            assert abs(overlap - overlap_direct(hf, hr)) <= 1e-12
            assert abs(cos - cosine_direct(hf, hr)) <= 1e-12
            assert hc == max(corr, overlap, cos)
    assert t.elapsed < 1.0
    _report(6, f"100 histogram pairs: Pearson/overlap/cosine match direct "
               f"formula evaluation within 1e-12 ({t.elapsed * 1000:.0f} ms)")


def test_criterion_07_percentile_range_oracle():
    with Timer() as t:
        rng = np.random.default_rng(7)
        for case in range(100):
            n = int(rng.integers(2, 900))
            kind = case % 3
            if kind == 0:
                vals = rng.normal(size=n)
            elif kind == 1:
                vals = rng.integers(0, 5, n).astype(np.float64)  # heavy ties
            else:
                vals = np.exp(rng.normal(size=n) * 2)
            assert abs(iqr(vals) - iqr_reference(vals)) <= 1e-12
    assert t.elapsed < 1.0
    _report(7, f"100 random grids: Q80-Q30 matches sort-and-interpolate "
               f"reference within 1e-12 ({t.elapsed * 1000:.0f} ms)")


def test_criterion_08_discrimination():
    with Timer() as t:
        folded = compute_deform_metrics(
            make_field(SynthSpec(kind="folded", size=64)), CFG)
        assert not folded.crit_jacobian
        assert folded.jac_neg_fraction == 1.0

        checker = compute_deform_metrics(
            make_field(SynthSpec(kind="checkerboard", size=64)), CFG)
        assert checker.resid_mean > 0.5
        assert not checker.crit_resid_mean
        assert not checker.crit_resid_std

        for seed in range(5):  # frozen seeded fixtures
            elastic = compute_deform_metrics(
                make_field(SynthSpec(kind="smooth_elastic", size=64, seed=seed)),
                CFG)
            assert elastic.criteria == (True,) * 5, seed
            assert elastic.d_q == 3
    assert t.elapsed < 2.0
    _report(8, f"folded field fails the Jacobian criterion, checkerboard "
               f"fails both residual criteria, smooth elastic passes all 5 "
               f"({t.elapsed:.2f} s)")


@pytest.mark.acceptance_slow
def test_criterion_09_efficiency_envelope(tmp_path):
    img = make_tissue_image(1024, 1024, seed=3)
    fixed = tmp_path / "fixed.png"
    registered = tmp_path / "registered.png"
    Image.fromarray(img.pixels).save(fixed)
    Image.fromarray(img.pixels).save(registered)
    field = make_field(SynthSpec(kind="smooth_elastic", size=256, seed=3))
    field_path = tmp_path / "field.npy"
    save_deformation_field(field, field_path)

    env = dict(os.environ)

    def run_cli(out_name):
        out = tmp_path / out_name
        proc = subprocess.Popen(
            [sys.executable, "-m", "urqa", "eval", "--fixed", str(fixed),
             "--registered", str(registered), "--field", str(field_path),
             "--out", str(out)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env)
        peak_kb = 0
        statm = Path(f"/proc/{proc.pid}/statm")
        page_kb = os.sysconf("SC_PAGE_SIZE") // 1024
        while proc.poll() is None:
            try:
                rss_pages = int(statm.read_text().split()[1])
                peak_kb = max(peak_kb, rss_pages * page_kb)
            except (OSError, ValueError, IndexError):
                pass
            time.sleep(0.01)
        assert proc.returncode == 0, proc.stderr.read().decode()
        report = json.loads((out / "report.json").read_text())
        return report, peak_kb

    # import-only baseline for the external probe
    baseline_kb = int(subprocess.run(
        [sys.executable, "-c",
         "import urqa.cli, urqa.pipeline\n"
         "import re\n"
         "print(re.search(r'VmRSS:\\s+(\\d+)', "
         "open('/proc/self/status').read()).group(1))"],
        capture_output=True, check=True, env=env).stdout)

    run_cli("warmup")        # populates the JIT cache; excluded from timing
    report, peak_kb = run_cli("measured")

    total_ms = report["timings_ms"]["total_ms"]
    cli_delta_mb = report["timings_ms"]["peak_rss_delta_mb"]
    external_delta_mb = (peak_kb - baseline_kb) / 1024.0
    assert total_ms <= 2000.0, f"pipeline took {total_ms:.0f} ms"
    assert cli_delta_mb <= 300.0, f"CLI-reported RSS delta {cli_delta_mb:.0f} MB"
    assert external_delta_mb <= 300.0, \
        f"externally probed RSS delta {external_delta_mb:.0f} MB"
    _report(9, f"512-scale pair evaluated in {total_ms:.0f} ms with "
               f"+{cli_delta_mb:.0f} MB self-reported / "
               f"+{external_delta_mb:.0f} MB externally probed peak RSS")


@pytest.mark.acceptance_slow
def test_criterion_10_batch_determinism(tmp_path):
    with Timer() as t:
        kinds = ("identity", "translation", "affine", "smooth_elastic",
                 "spike_noise")
        rows = []
        for i in range(20):
            fixed, registered, field = write_pair(
                tmp_path, name=f"b{i}", seed=i, image_size=96, field_size=48,
                field_kind=kinds[i % len(kinds)],
                registered_seed=None if i % 2 == 0 else i + 100)
            rows.append((f"pair_{i:02d}", fixed, registered, field))
        manifest = tmp_path / "manifest.csv"
        manifest.write_text(
            "pair_id,fixed,registered,field\n"
            + "\n".join(",".join(str(c) for c in r) for r in rows) + "\n")
        entries = load_manifest(manifest)
        run_batch(entries, CFG, tmp_path / "w1", workers=1)
        run_batch(entries, CFG, tmp_path / "w8", workers=8)
        for row in rows:
            pair_id = row[0]
            a = json.loads((tmp_path / "w1" / f"{pair_id}.json").read_text())
            b = json.loads((tmp_path / "w8" / f"{pair_id}.json").read_text())
            a.pop("timings_ms")
            b.pop("timings_ms")
            assert a == b, pair_id
    assert t.elapsed < 30.0
    _report(10, f"20-pair manifest: per-pair reports bit-identical for "
                f"workers=1 vs workers=8 ({t.elapsed:.1f} s)")


def test_criterion_11_invariance_suite():
    with Timer() as t:
        # (a) global translation: Jacobian and residual grids are exactly
        # unchanged, hence their three criteria; on constant fields the whole
        # criterion vector is unchanged
        shifts = ((12.0, -7.0), (100.0, 40.0))
        bases = [make_field(SynthSpec(kind="smooth_elastic", size=48, seed=s))
                 for s in (0, 1)]
        bases.append(make_field(SynthSpec(kind="affine", size=48,
                                          params={"a": [[0.05, -0.02],
                                                        [0.01, 0.04]]})))
        bases.append(make_field(SynthSpec(kind="spike_noise", size=48, seed=2)))
        for base in bases:
            m0 = compute_deform_metrics(base, CFG)
            for cx, cy in shifts:
                shifted = DeformationField(ux=base.ux + cx, uy=base.uy + cy)
                np.testing.assert_allclose(jacobian_determinant(shifted),
                                           jacobian_determinant(base),
                                           atol=1e-9)
                np.testing.assert_allclose(smoothness_residual(shifted, CFG)[0],
                                           smoothness_residual(base, CFG)[0],
                                           atol=1e-9)
                m1 = compute_deform_metrics(shifted, CFG)
                assert m0.crit_jacobian == m1.crit_jacobian
                assert m0.crit_resid_mean == m1.crit_resid_mean
                assert m0.crit_resid_std == m1.crit_resid_std
        for tx, ty in ((0.0, 0.0), (5.0, 0.0), (-2.0, 9.0)):
            const = make_field(SynthSpec(kind="translation", size=32,
                                         params={"tx": tx, "ty": ty}))
            shifted = DeformationField(ux=const.ux + 12.0, uy=const.uy - 3.0)
            assert (compute_deform_metrics(const, CFG).criteria
                    == compute_deform_metrics(shifted, CFG).criteria)

        # (b) rotation behavior of magnitude / direction
        base = make_field(SynthSpec(kind="smooth_elastic", size=48, seed=3))
        mag0, theta0 = magnitude_direction(base)
        for angle in (0.3, -1.2, 2.9):
            c, s = math.cos(angle), math.sin(angle)
            rotated = DeformationField(ux=c * base.ux - s * base.uy,
                                       uy=s * base.ux + c * base.uy)
            mag1, theta1 = magnitude_direction(rotated)
            np.testing.assert_allclose(mag1, mag0, atol=1e-9)
            nz = mag0 > 1e-12
            wrapped = np.mod(theta1 - theta0 - angle + math.pi,
                             2.0 * math.pi) - math.pi
            np.testing.assert_allclose(wrapped[nz], 0.0, atol=1e-9)
            assert magnitude_criterion(mag1, CFG) == magnitude_criterion(mag0, CFG)

        # (c) mask polarity
        for seed in range(3):
            img = make_tissue_image(128, 128, seed=seed, rgb=False)
            inverted = RasterImage(pixels=(255 - img.pixels).astype(np.uint8))
            dark = generate_mask(img, tissue_is_dark=True)
            bright = generate_mask(inverted, tissue_is_dark=False)
            np.testing.assert_array_equal(dark.bits, bright.bits)
    assert t.elapsed < 5.0
    _report(11, f"translation leaves J/R and their criteria unchanged "
                f"(5/5 on constant fields), rotation shifts angles and "
                f"preserves magnitudes, mask polarity invariant "
                f"({t.elapsed:.2f} s)")
