"""Acceptance suite: every release criterion at its stated tolerance.

One PASS/FAIL line is printed per criterion (run with ``pytest -s`` to see
them during the run). The two training-side criteria (exported-weight
equivalence and desk-scale learning) live in the trainer package's own
test suite, since they exercise that component.

Published full-training quality scores (SI-SDR 22.34, STOI 0.94, PESQ-WB
2.82) are NOT reproduced here: they require challenge-scale training data
and weeks of optimization. The property-based criteria below stand in.
"""

import math
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import speech_like

from fbsd import ModelConfig, StreamingDenoiser, random_init
from fbsd.bench import run_bench
from fbsd.costs import cost_report
from fbsd.dsp import (
    AudioBuffer,
    OlaState,
    SpectralFrame,
    WindowSpec,
    apply_mask,
    frame_stream,
    synthesize_frame,
)
from fbsd.metrics import si_sdr, stoi
from fbsd.mixing import mix_signals


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] FAIL: {name}")
        raise
    print(f"[ACCEPTANCE] PASS: {name}")


@pytest.fixture(scope="module")
def report():
    return cost_report(ModelConfig())


@pytest.fixture(scope="module")
def engine(default_weights):
    return StreamingDenoiser(default_weights)


def test_mapping_parameter_delta(report):
    with criterion("mapping parameters = 197,921 within ±1,000"):
        assert (1025 * 96 + 96) + (96 * 1025 + 1025) == 197_921
        assert abs(report.params_mapping - 197_921) <= 1000


def test_core_and_total_parameter_budget(report):
    with criterion("core params within ±5% of 0.253 M, total within ±5% of 0.451 M"):
        assert abs(report.params_core - 253_000) / 253_000 <= 0.05
        assert abs(report.params_total - 451_000) / 451_000 <= 0.05


def test_macs_accounting(report):
    with criterion("per-frame MACs in [4 M, 9 M]; per-frame and per-second reported"):
        assert 4_000_000 <= report.macs_per_frame <= 9_000_000
        from fbsd.costs import format_cost_report

        text = format_cost_report(report)
        assert "per frame" in text and "per second" in text


def test_streaming_offline_equivalence(engine):
    with criterion("streaming vs offline mask error ≤ 1e-5 on 2 s seeded audio"):
        rng = np.random.default_rng(2024)
        audio = AudioBuffer(rng.uniform(-0.5, 0.5, 2 * 48000).astype(np.float32))
        mags = np.stack([f.magnitude for f in frame_stream(audio, engine.window)])
        state = engine.new_state()
        streamed = np.stack([engine.step_mask(m, state) for m in mags])
        offline = engine.process_offline(mags)
        rel = np.abs(streamed - offline).max(axis=1) / np.maximum(
            np.abs(offline).max(axis=1), 1e-12
        )
        assert rel.max() <= 1e-5


def test_causality_bit_exact(engine):
    with criterion("mask at t bit-identical under 20 future-frame perturbations"):
        rng = np.random.default_rng(7)
        t_frames = 48
        mags = np.abs(rng.normal(size=(t_frames, 1025))).astype(np.float32)
        base = engine.process_offline(mags)
        for _ in range(20):
            t = int(rng.integers(0, t_frames - 1))
            k = int(rng.integers(1, t_frames - t))
            perturbed = mags.copy()
            perturbed[t + k] += np.abs(rng.normal(size=1025)).astype(np.float32)
            got = engine.process_offline(perturbed[: t + k + 1])
            assert np.array_equal(got[t], base[t]), (t, k)


def test_dsp_round_trip():
    with criterion("analyze → unit mask → synthesize RMS ≤ 1e-6 (steady state)"):
        win = WindowSpec()
        rng = np.random.default_rng(11)
        x = rng.uniform(-0.5, 0.5, 48000).astype(np.float32)
        frames = frame_stream(AudioBuffer(x), win)
        ola = OlaState.zeros(win)
        outs = []
        for f in frames:
            f = apply_mask(f, np.ones(win.n_bins))
            o, ola = synthesize_frame(f, win, ola)
            outs.append(o)
        o, _ = synthesize_frame(
            SpectralFrame(np.zeros(win.n_bins), np.zeros(win.n_bins)), win, ola
        )
        outs.append(o)
        y = np.concatenate(outs)[win.fft_size - win.hop:][: len(x)]
        err = (y - x)[win.fft_size: len(x) - win.fft_size]
        assert np.sqrt(np.mean(err ** 2)) <= 1e-6


def test_metric_oracles():
    with criterion("si_sdr oracle ≤ 1e-9 ×100; orthogonal mix = 0 dB; stoi(x,x) = 1"):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(64, 2048))
            ref = rng.normal(size=n)
            est = rng.normal(size=n)
            s_t = (np.dot(est, ref) / np.dot(ref, ref)) * ref
            oracle = 10 * np.log10(np.dot(s_t, s_t) / np.dot(est - s_t, est - s_t))
            assert abs(si_sdr(ref, est) - oracle) <= 1e-9
        ref = rng.normal(size=48000)
        raw = rng.normal(size=48000)
        noise = raw - (np.dot(raw, ref) / np.dot(ref, ref)) * ref
        noise *= np.linalg.norm(ref) / np.linalg.norm(noise)
        assert abs(si_sdr(ref, ref + noise)) <= 1e-6
        x = speech_like(3 * 48000, seed=5)
        assert abs(stoi(x, x, 48000) - 1.0) <= 1e-6


def test_oracle_mask_improves_si_sdr():
    with criterion("ideal-ratio mask improves SI-SDR by ≥ 5 dB end to end"):
        rng = np.random.default_rng(42)
        clean = speech_like(2 * 48000, seed=7)
        noise = rng.normal(0, 0.1, len(clean)).astype(np.float32)
        mixture, c, n = mix_signals(clean, [noise], snr_db=0, peak=0.6)
        win = WindowSpec()
        ola = OlaState.zeros(win)
        outs = []
        frames = zip(
            frame_stream(AudioBuffer(mixture), win),
            frame_stream(AudioBuffer(c), win),
            frame_stream(AudioBuffer(n), win),
        )
        for fm, fc, fn in frames:
            irm = np.clip(
                fc.magnitude / (fc.magnitude + fn.magnitude + 1e-12), 0.0, 1.0
            )
            o, ola = synthesize_frame(apply_mask(fm, irm), win, ola)
            outs.append(o)
        o, _ = synthesize_frame(
            SpectralFrame(np.zeros(win.n_bins), np.zeros(win.n_bins)), win, ola
        )
        outs.append(o)
        y = np.concatenate(outs)[win.fft_size - win.hop:][: len(mixture)]
        uplift = si_sdr(c, y) - si_sdr(c, mixture)
        assert math.isfinite(uplift)
        assert uplift >= 5.0


def test_rtf_real_time(default_weights):
    with criterion("RTF < 0.2 over 100 passes and RTF(w/o mapping) < RTF(w/)"):
        rep = run_bench(default_weights, passes=100, warmup=10)
        assert rep.rtf_with_mapping < 0.2
        assert rep.rtf_without_mapping < rep.rtf_with_mapping


def test_table1_scores_not_reproduced():
    with criterion("published full-training scores explicitly not reproduced"):
        # SI-SDR 22.34 / STOI 0.94 / PESQ-WB 2.82 need challenge-scale
        # training; the properties above are the desk-scale stand-ins.
        assert True
