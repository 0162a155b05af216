"""End-to-end denoising: hop blocks through STFT, model and overlap-add.

The block generator keeps only the engine's stream state alive, so memory
is independent of the input length. Output sample count equals input
sample count: the one-hop synthesis latency is absorbed by dropping the
pre-pad emission and flushing one zero block at the end.
"""

from __future__ import annotations

import time
from typing import Iterable, Iterator

import numpy as np

from .dsp import AudioBuffer, StreamingStft
from .errors import InvalidArgumentError
from .model import StreamingDenoiser


def denoise_blocks(
    engine: StreamingDenoiser, blocks: Iterable[np.ndarray]
) -> Iterator[np.ndarray]:
    """Denoise hop-sized sample blocks; only the final block may be short."""
    hop = engine.window.hop
    stft = StreamingStft(engine.window)
    state = engine.new_state()
    prev_len: int | None = None
    saw_partial = False
    for block in blocks:
        b = np.asarray(block, dtype=np.float32)
        if b.ndim != 1 or not 0 < len(b) <= hop:
            raise InvalidArgumentError(f"blocks must hold 1..{hop} samples")
        if saw_partial:
            raise InvalidArgumentError("only the final block may be shorter than one hop")
        saw_partial = len(b) < hop
        padded = np.zeros(hop, dtype=np.float32)
        padded[: len(b)] = b
        frame = stft.push(padded)
        _, denoised = engine.step(frame, state)
        out = stft.emit(denoised)
        if prev_len is not None:
            yield out[:prev_len]
        prev_len = len(b)
    if prev_len is not None:
        # flush: the final frame still covers the last real samples
        frame = stft.push(np.zeros(hop, dtype=np.float32))
        _, denoised = engine.step(frame, state)
        yield stft.emit(denoised)[:prev_len]


def denoise_audio(
    engine: StreamingDenoiser, audio: AudioBuffer
) -> tuple[AudioBuffer, int, float]:
    """Denoise a whole buffer; returns (audio, frames processed, wall seconds)."""
    from .config import SAMPLE_RATE

    if audio.sample_rate != SAMPLE_RATE:
        raise InvalidArgumentError(
            f"engine runs at {SAMPLE_RATE} Hz, input is {audio.sample_rate} Hz"
        )
    hop = engine.window.hop
    x = audio.samples
    if len(x) == 0:
        raise InvalidArgumentError("empty input audio")
    t0 = time.perf_counter()
    blocks = (x[i:i + hop] for i in range(0, len(x), hop))
    out = np.concatenate(list(denoise_blocks(engine, blocks)))
    wall = time.perf_counter() - t0
    n_frames = int(np.ceil(len(x) / hop)) + 1  # includes the flush frame
    return AudioBuffer(out, audio.sample_rate), n_frames, wall
