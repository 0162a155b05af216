"""Real-time-factor benchmark for the streaming engine.

Measures the mean wall time of one streaming step over a fixed number of
passes after warm-up, single stream, no accelerator. The DNN is timed
with and without the input/output mapping; the STFT/overlap-add path is
excluded unless ``include_dsp`` is set. RTF = step time / hop duration.
"""

from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from .config import SAMPLE_RATE
from .dsp import SpectralFrame, StreamingStft
from .model import StreamingDenoiser
from .weights_io import ModelWeights


@dataclass(frozen=True)
class BenchReport:
    passes: int
    warmup: int
    include_dsp: bool
    step_ms_with_mapping: float | None
    step_ms_without_mapping: float | None
    rtf_with_mapping: float | None
    rtf_without_mapping: float | None
    hop: int
    sample_rate: int
    threads: str

    def to_dict(self) -> dict:
        return asdict(self)


def _format(value: float | None, fmt: str) -> str:
    return "-" if value is None else format(value, fmt)


def format_bench_report(r: BenchReport) -> str:
    lines = [
        f"passes: {r.passes} (warmup {r.warmup}), "
        f"{'full pipeline' if r.include_dsp else 'DNN only'}, threads={r.threads}",
        f"hop: {r.hop} samples at {r.sample_rate} Hz "
        f"({1000.0 * r.hop / r.sample_rate:.3f} ms budget/frame)",
        f"with mapping:    {_format(r.step_ms_with_mapping, '.4f')} ms/frame, "
        f"RTF {_format(r.rtf_with_mapping, '.4f')}",
        f"without mapping: {_format(r.step_ms_without_mapping, '.4f')} ms/frame, "
        f"RTF {_format(r.rtf_without_mapping, '.4f')}",
    ]
    return "\n".join(lines)


def run_bench(
    weights: ModelWeights,
    passes: int = 100,
    warmup: int = 10,
    include_dsp: bool = False,
    measure_mapping: bool = True,
    measure_core: bool = True,
    seed: int = 0,
) -> BenchReport:
    if passes < 1:
        passes = 1
    engine = StreamingDenoiser(weights)
    cfg = weights.config
    hop = engine.window.hop
    rng = np.random.default_rng(seed)
    mag = np.abs(rng.normal(size=cfg.n_bins)).astype(np.float32)
    phase = rng.uniform(-np.pi, np.pi, cfg.n_bins).astype(np.float32)
    block = rng.uniform(-0.1, 0.1, hop).astype(np.float32)

    ms_full = rtf_full = None
    if measure_mapping:
        state = engine.new_state()
        if include_dsp:
            stft = StreamingStft(engine.window)
            for _ in range(warmup):
                _, den = engine.step(stft.push(block), state)
                stft.emit(den)
            t0 = time.perf_counter()
            for _ in range(passes):
                _, den = engine.step(stft.push(block), state)
                stft.emit(den)
            elapsed = time.perf_counter() - t0
        else:
            frame = SpectralFrame(mag, phase)
            for _ in range(warmup):
                engine.step(frame, state)
            t0 = time.perf_counter()
            for _ in range(passes):
                engine.step(frame, state)
            elapsed = time.perf_counter() - t0
        ms_full = 1000.0 * elapsed / passes
        rtf_full = (elapsed / passes) / (hop / SAMPLE_RATE)

    ms_core = rtf_core = None
    if measure_core:
        state = engine.new_state()
        h = rng.uniform(-1.0, 1.0, cfg.n_features).astype(np.float32)
        for _ in range(warmup):
            engine._step_core(h, state)
        t0 = time.perf_counter()
        for _ in range(passes):
            engine._step_core(h, state)
        elapsed = time.perf_counter() - t0
        ms_core = 1000.0 * elapsed / passes
        rtf_core = (elapsed / passes) / (hop / SAMPLE_RATE)

    return BenchReport(
        passes=passes,
        warmup=warmup,
        include_dsp=include_dsp,
        step_ms_with_mapping=ms_full,
        step_ms_without_mapping=ms_core,
        rtf_with_mapping=rtf_full,
        rtf_without_mapping=rtf_core,
        hop=hop,
        sample_rate=SAMPLE_RATE,
        threads=os.environ.get("FBSD_THREADS", "default"),
    )
