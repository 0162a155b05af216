"""Windowed STFT analysis, mask application and overlap-add synthesis.

Streaming protocol: the caller keeps a sliding buffer of ``fft_size``
samples advanced by ``hop`` each frame; ``analyze_frame`` turns it into a
magnitude/phase pair, ``synthesize_frame`` returns ``hop`` finished output
samples per frame (one hop of algorithmic delay). The same square-root
Hann window is used for analysis and synthesis, which satisfies the
constant-overlap-add condition at 50% overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import FFT_SIZE, HOP, SAMPLE_RATE
from .errors import InvalidArgumentError

# synthesis tail values below this are flushed to zero to avoid denormals
_DENORMAL_FLOOR = 1e-30


@dataclass
class AudioBuffer:
    """Mono audio samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 1:
            raise InvalidArgumentError("AudioBuffer requires a 1D sample array")
        if self.sample_rate <= 0:
            raise InvalidArgumentError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("AudioBuffer samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def sqrt_hann(fft_size: int) -> np.ndarray:
    """Periodic square-root Hann window.

    Kept in float64: the squared pair must overlap-add to a constant
    within 1e-9, which float32 storage cannot guarantee.
    """
    n = np.arange(fft_size)
    return np.sqrt(0.5 * (1.0 - np.cos(2.0 * np.pi * n / fft_size)))


@dataclass(frozen=True)
class WindowSpec:
    """Analysis/synthesis window pair at 50% overlap."""

    fft_size: int = FFT_SIZE
    hop: int = HOP
    window: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.window is None:
            object.__setattr__(self, "window", sqrt_hann(self.fft_size))
        if self.fft_size <= 0 or self.hop != self.fft_size // 2:
            raise InvalidArgumentError("hop must equal fft_size / 2")
        if self.window.shape != (self.fft_size,) or np.any(self.window < 0):
            raise InvalidArgumentError("window must be fft_size non-negative values")
        # constant-overlap-add at 50%: sum of squared shifted windows constant
        w2 = self.window.astype(np.float64) ** 2
        cola = w2[: self.hop] + w2[self.hop:]
        ref = cola.mean()
        if ref <= 0 or np.abs(cola - ref).max() > 1e-9 * ref:
            raise InvalidArgumentError("window violates COLA at 50% overlap")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass
class SpectralFrame:
    """One STFT frame, split into non-negative magnitude and phase."""

    magnitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self) -> None:
        self.magnitude = np.asarray(self.magnitude, dtype=np.float32)
        self.phase = np.asarray(self.phase, dtype=np.float32)
        if self.magnitude.shape != self.phase.shape or self.magnitude.ndim != 1:
            raise InvalidArgumentError("magnitude and phase must be equal-length vectors")
        if np.any(self.magnitude < 0):
            raise InvalidArgumentError("magnitude entries must be non-negative")

    @property
    def n_bins(self) -> int:
        return len(self.magnitude)


@dataclass
class OlaState:
    """Overlap-add synthesis tail (fft_size - hop samples)."""

    tail: np.ndarray

    @classmethod
    def zeros(cls, window: WindowSpec) -> "OlaState":
        return cls(tail=np.zeros(window.fft_size - window.hop, dtype=np.float64))


def analyze_frame(window: WindowSpec, recent_samples: np.ndarray) -> SpectralFrame:
    """One-sided spectrum of the windowed frame, as magnitude and phase."""
    x = np.asarray(recent_samples, dtype=np.float32)
    if x.shape != (window.fft_size,):
        raise InvalidArgumentError(
            f"analyze_frame expects {window.fft_size} samples, got {x.shape}"
        )
    spec = np.fft.rfft(x * window.window)
    return SpectralFrame(
        magnitude=np.abs(spec).astype(np.float32),
        phase=np.angle(spec).astype(np.float32),
    )


def apply_mask(frame: SpectralFrame, mask: np.ndarray) -> SpectralFrame:
    """Multiply the magnitude by a [0, 1] gain per bin; phase is untouched."""
    mask = np.asarray(mask, dtype=np.float32)
    if mask.shape != frame.magnitude.shape:
        raise InvalidArgumentError(
            f"mask length {mask.shape} != frame bins {frame.magnitude.shape}"
        )
    if np.any(mask < 0.0) or np.any(mask > 1.0):
        raise InvalidArgumentError("mask entries must lie in [0, 1]")
    return SpectralFrame(magnitude=frame.magnitude * mask, phase=frame.phase)


def synthesize_frame(
    frame: SpectralFrame, window: WindowSpec, state: OlaState
) -> tuple[np.ndarray, OlaState]:
    """Inverse FFT, synthesis window and overlap-add; emits ``hop`` samples."""
    if frame.n_bins != window.n_bins:
        raise InvalidArgumentError(
            f"frame has {frame.n_bins} bins, window implies {window.n_bins}"
        )
    if state.tail.shape != (window.fft_size - window.hop,):
        raise InvalidArgumentError("OLA tail length inconsistent with window")
    spec = frame.magnitude * np.exp(1j * frame.phase.astype(np.float64))
    # the tail is accumulated in float64; at 50% overlap it is one hop long
    rec = np.fft.irfft(spec, n=window.fft_size) * window.window
    out = rec[: window.hop] + state.tail
    tail = rec[window.hop:].copy()
    tail[np.abs(tail) < _DENORMAL_FLOOR] = 0.0
    return out.astype(np.float32), OlaState(tail=tail)


def frame_stream(audio: AudioBuffer, window: WindowSpec | None = None) -> list[SpectralFrame]:
    """Causal framing of a whole utterance.

    The signal is left-padded with ``fft_size - hop`` zeros so the first
    hop of audio yields frame 0, and right-padded so a trailing partial
    hop still produces a frame; T = ceil(len / hop).
    """
    window = window or WindowSpec()
    x = audio.samples
    if len(x) == 0:
        raise InvalidArgumentError("frame_stream: empty input")
    hop, n = window.hop, window.fft_size
    t_frames = int(np.ceil(len(x) / hop))
    padded = np.zeros((t_frames - 1) * hop + n, dtype=np.float32)
    padded[n - hop: n - hop + len(x)] = x
    return [
        analyze_frame(window, padded[t * hop: t * hop + n]) for t in range(t_frames)
    ]


class StreamingStft:
    """Hop-by-hop analysis/synthesis with one hop of latency.

    ``push`` accepts exactly ``hop`` new input samples and returns the
    analysis frame aligned with :func:`frame_stream`; ``emit`` returns the
    finished ``hop`` output samples for the frame just synthesized. The
    first emitted hop corresponds to the zero pre-pad and is dropped by
    :meth:`StreamingStft.trim`; callers flush with one final zero block.
    """

    def __init__(self, window: WindowSpec | None = None):
        self.window = window or WindowSpec()
        self._buf = np.zeros(self.window.fft_size, dtype=np.float32)
        self._ola = OlaState.zeros(self.window)
        self._frames_in = 0

    def push(self, block: np.ndarray) -> SpectralFrame:
        block = np.asarray(block, dtype=np.float32)
        if block.shape != (self.window.hop,):
            raise InvalidArgumentError(
                f"push expects exactly {self.window.hop} samples"
            )
        self._buf = np.concatenate([self._buf[self.window.hop:], block])
        self._frames_in += 1
        return analyze_frame(self.window, self._buf)

    def emit(self, frame: SpectralFrame) -> np.ndarray:
        out, self._ola = synthesize_frame(frame, self.window, self._ola)
        return out

    @property
    def frames_processed(self) -> int:
        return self._frames_in
