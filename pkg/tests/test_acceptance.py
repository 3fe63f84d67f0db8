"""Acceptance criteria; each test prints one PASS/FAIL line at the target tolerance."""

import json
import os
import time

import numpy as np
import pytest

from fpscope import detect, dsp, pipeline, profiles, stats
from fpscope.cli import main
from fpscope.corpus import CorpusSpec
from fpscope.synth import FixtureSpec, generate_corpus, jpeg_quant_table, write_fixture

from conftest import noise, record, smooth_corpus, white_corpus

# Every summary produced here is checked by the normalization criterion at the end.
SUMMARIES = []


def run(images, **kw):
    a = pipeline.analyze(CorpusSpec(tuple(images), max_images=len(images), crop=None), **kw)
    SUMMARIES.append(a.summary)
    return a


def fixture(**kw):
    return list(generate_corpus(FixtureSpec(**kw)))


def matrix_dft_oracle(x):
    """Brute-force double sum written as two explicit twiddle matrices."""
    M, N = x.shape
    wm = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(M)) / M)
    wn = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N)
    return np.array([[sum(wm[k, m] * wn[l, n] * x[m, n] for m in range(M) for n in range(N))
                      for l in range(N)] for k in range(M)])


def test_dft_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for M in range(1, 17):
        for N in range(1, 17):
            x = noise((M, N), 1000 + 17 * M + N)
            worst = max(worst, np.abs(dsp.dft2(x) - matrix_dft_oracle(x)).max())
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10
    record("DFT oracle (sizes 1..16 x 1..16)", ok,
           f"max abs error {worst:.2e} (< 1e-9), runtime {elapsed:.2f} s (< 10 s)")
    assert ok


def spatial_autocorr(x):
    """Circular autocorrelation from shifted products (no transforms)."""
    M, N = x.shape
    cols = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
    shifted = x[:, cols]                       # shifted[m, n, dn] = x[m, n+dn]
    rowcorr = np.einsum("mn,knd->mkd", x, shifted)  # rows m, m' at column lag dn
    R = np.empty((M, N))
    for dm in range(M):
        R[dm] = rowcorr[np.arange(M), (np.arange(M) + dm) % M].sum(axis=0)
    return R / (M * N)


def test_wiener_khinchin():
    worst_wk = worst_sp = 0.0
    for i in range(200):
        x = noise((64, 64), 5000 + i) + 0.3
        R = dsp.autocorr(x, remove_mean=False)
        P = np.abs(dsp.dft2(x)) ** 2 / x.size
        worst_wk = max(worst_wk, np.abs(dsp.dft2(R) - P).max() / P.max())
        if i < 20:
            ref = spatial_autocorr(x)
            worst_sp = max(worst_sp, np.abs(R - ref).max() / np.abs(ref).max())
    ok = worst_wk < 1e-9 and worst_sp < 1e-9
    record("Wiener-Khinchin (200 images 64x64)", ok,
           f"max rel error {worst_wk:.2e}, spatial oracle {worst_sp:.2e} (< 1e-9)")
    assert ok


@pytest.mark.parametrize("period", [4, 8])
def test_upsampling_lattice(period):
    imgs = fixture(size=256, count=100, alpha=2.0, seed=40 + period,
                   artifact={"period": period, "amplitude": 0.05, "pattern_seed": 7})
    t0 = time.perf_counter()
    a = run(imgs)
    elapsed = time.perf_counter() - t0
    ok = a.peaks.inferred == period and elapsed < 60
    scores = {k: round(v, 1) for k, v in a.peaks.scores.items()}
    record(f"upsampling period {period} (amp 0.05, 100 x 256^2)", ok,
           f"inferred {a.peaks.inferred}, scores {scores}, {elapsed:.1f} s (< 60 s)")
    assert ok


def test_white_noise_control():
    hits, worst, slowest = [], 0.0, 0.0
    for seed in range(50):
        t0 = time.perf_counter()
        a = run(white_corpus(100, 256, 900 + seed))
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, max(a.peaks.scores.values()))
        if a.peaks.inferred is not None:
            hits.append(seed)
    ok = not hits and slowest < 60
    record("white-noise control (50 seeds x 100 images)", ok,
           f"false positives {len(hits)}, largest lattice score {worst:.2f} "
           f"(threshold {detect.DEFAULT_THRESHOLD}), slowest corpus {slowest:.1f} s")
    assert ok


LADDER = (0.0025, 0.005, 0.01, 0.02, 0.03, 0.05)


@pytest.mark.parametrize("period", [2, 4, 8, 16])
def test_sensitivity_floor(period):
    """Smallest ladder amplitude from which every larger one infers the period."""
    hits = []
    for amp in LADDER:
        imgs = fixture(size=256, count=100, alpha=2.0, seed=70 + period,
                       artifact={"period": period, "amplitude": amp, "pattern_seed": 7})
        hits.append(run(imgs).peaks.inferred == period)
    floor = None
    for i in range(len(LADDER)):
        if all(hits[i:]):
            floor = LADDER[i]
            break
    record(f"sensitivity floor period {period} (100 x 256^2, alpha 2)", floor is not None,
           f"floor amplitude {floor}; ladder hits {dict(zip(LADDER, hits))}")
    assert floor is not None and floor <= 0.05


def test_jpeg_grid():
    clean = run(smooth_corpus(20, 100)).grid.score
    q75 = run(smooth_corpus(20, 100, 75)).grid.score
    ok = q75 > 5.0 and q75 > 10 * abs(clean)
    record("JPEG grid score (Q75 vs matched clean, smooth alpha=5 fields)", ok,
           f"Q75 {q75:.2f} (> 5), clean {clean:.3f} (Q75 > 10x clean)")
    assert ok


def test_jpeg_q50_table():
    annex_k = np.array([
        [16, 11, 10, 16, 24, 40, 51, 61], [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56], [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77], [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101], [72, 92, 95, 98, 112, 100, 103, 99]])
    ok = np.array_equal(jpeg_quant_table(50), annex_k)
    record("JPEG Q50 table equals Annex K", ok, "exact integer match" if ok else "mismatch")
    assert ok


def test_power_law_exponent():
    a2 = run(fixture(size=256, count=100, alpha=2.0, seed=3), profile_source="raw").fit.alpha
    flat = run(fixture(size=256, count=100, alpha=0.0, seed=4), profile_source="raw").fit.alpha
    ok = 1.9 <= a2 <= 2.1 and -0.05 <= flat <= 0.05
    record("power-law fit over rho in [0.2, 0.5]", ok,
           f"alpha=2 corpus -> {a2:.4f} (in [1.9, 2.1]), flat -> {flat:.4f} (in [-0.05, 0.05])")
    assert ok


def test_fisher_analytics():
    iso = run(fixture(size=128, count=40, alpha=2.0, seed=1))
    diag = run(fixture(size=128, count=40, alpha=2.0, seed=2, diagonal_attenuation=0.3))
    same = pipeline.compare(iso, iso).values
    ab, ba = pipeline.compare(diag, iso).values, pipeline.compare(iso, diag).values
    d = 0.37
    n = 16
    c = profiles.angular_centers()
    s = profiles.AngularProfile(c, np.full(n, 1 + d), np.full(n, d * d), np.ones(n, int), 5)
    r = profiles.AngularProfile(c, np.full(n, 1.0), np.full(n, d * d), np.ones(n, int), 5)
    err = np.abs(profiles.fisher_profile(s, r).values - 1 / np.sqrt(2)).max()
    ok = (np.array_equal(same, np.zeros(n)) and err < 1e-9 and np.array_equal(ab, -ba))
    record("Fisher profile analytics", ok,
           f"identical max |F| {np.abs(same).max():.1e}, constructed case error {err:.1e} "
           f"(< 1e-9), swap negates exactly: {np.array_equal(ab, -ba)}")
    assert ok


def _strip(path):
    data = json.loads(path.read_text())
    data.pop("timing")
    data["config"].pop("output")
    return data


def test_determinism_threads(tmp_path):
    src = tmp_path / "fx"
    write_fixture(FixtureSpec(size=256, count=40, alpha=2.0, seed=11,
                              artifact={"period": 8, "amplitude": 0.05, "pattern_seed": 2},
                              chain=[{"kind": "jpeg", "quality": 90}]), src)
    outs = {}
    for t in (1, 2, 8):
        outs[t] = tmp_path / f"t{t}"
        assert main(["analyze", "--input", str(src), "--output", str(outs[t]),
                     "--threads", str(t), "--profiles-on", "residual"]) == 0
    files = ("summary_avg_power.f64", "summary_avg_autocorr.f64", "radial.csv",
             "radial_power.csv", "angular.csv")
    diff = [f"{f}@{t}" for t in (2, 8) for f in files
            if (outs[t] / f).read_bytes() != (outs[1] / f).read_bytes()]
    diff += [f"report.json@{t}" for t in (2, 8)
             if _strip(outs[t] / "report.json") != _strip(outs[1] / "report.json")]
    arrays = [stats.summarize_arrays(white_corpus(12, 64, 2), threads=t) for t in (1, 2, 8)]
    same_mem = all(np.array_equal(a.avg_power, arrays[0].avg_power) for a in arrays)
    ok = not diff and same_mem
    record("determinism across threads 1/2/8", ok,
           "bitwise identical summaries, profiles, report.json" if ok else f"differs: {diff}")
    assert ok


def test_normalization():
    s = stats.summarize_arrays(white_corpus(4, 128, 8))
    SUMMARIES.append(s)
    worst = max(abs(x.avg_power.mean() - 1.0) for x in SUMMARIES)
    center_ok = all(stats.autocorr_crop(x, 65)[32, 32] == x.avg_autocorr[0, 0]
                    for x in SUMMARIES)
    ok = worst < 1e-9 and center_ok
    record("normalization contract", ok,
           f"{len(SUMMARIES)} corpora, max |mean(avg_power) - 1| {worst:.1e} (< 1e-9), "
           f"crop(65) center equals R(0,0): {center_ok}")
    assert ok


@pytest.fixture(scope="module")
def big_fixture(tmp_path_factory):
    src = tmp_path_factory.mktemp("big") / "fx"
    write_fixture(FixtureSpec(size=256, count=1000, alpha=2.0, seed=5,
                              artifact={"period": 4, "amplitude": 0.05, "pattern_seed": 1}), src)
    return src


@pytest.fixture(scope="module")
def throughput(big_fixture, tmp_path_factory):
    out, times = {}, {}
    for t in (1, 8):
        out[t] = tmp_path_factory.mktemp(f"through{t}")
        t0 = time.perf_counter()
        assert main(["analyze", "--input", str(big_fixture), "--output", str(out[t]),
                     "--threads", str(t), "--no-plots"]) == 0
        times[t] = time.perf_counter() - t0
    return times, out


def test_throughput_single_thread(throughput):
    times, _ = throughput
    ok = times[1] < 120
    record("throughput 1000 x 256^2 single-threaded", ok, f"{times[1]:.1f} s (< 120 s)")
    assert ok


@pytest.mark.xfail((os.cpu_count() or 1) < 8, strict=True,
                   reason="fewer than 8 CPUs available; an 8-thread speedup of 3x is unreachable")
def test_throughput_parallel_speedup(throughput):
    times, out = throughput
    speedup = times[1] / times[8]
    same = _strip(out[1] / "report.json") == _strip(out[8] / "report.json")
    ok = speedup >= 3 and same
    record("parallel speedup at 8 threads", ok,
           f"{speedup:.2f}x (>= 3x) on {os.cpu_count()} CPU(s), identical output: {same}")
    assert ok
