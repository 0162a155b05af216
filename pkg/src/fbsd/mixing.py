"""SNR-controlled noise mixing and fixed-length segmentation.

A mixture is built by summing up to two noise signals, scaling the sum so
the clean/noise power ratio hits an integer SNR, adding, then scaling the
absolute peak of the mixture to a target value. When the SNR or peak is
not given it is sampled uniformly (integer dB in [-10, 25], peak in
[0.001, 0.999]) from the provided seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import AudioBuffer
from .errors import InvalidArgumentError, MixError

SNR_RANGE = (-10, 25)
PEAK_RANGE = (0.001, 0.999)
SEGMENT_SECONDS = 4.0


@dataclass
class MixSpec:
    """Validated parameters of one mixing job."""

    clean: str
    noises: list[str] = field(default_factory=list)
    snr_db: int | None = None
    peak: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= len(self.noises) <= 2:
            raise InvalidArgumentError("between one and two noise files are required")
        if self.snr_db is not None:
            if int(self.snr_db) != self.snr_db:
                raise InvalidArgumentError("snr_db must be an integer")
            if not SNR_RANGE[0] <= self.snr_db <= SNR_RANGE[1]:
                raise InvalidArgumentError(f"snr_db must lie in {SNR_RANGE}")
        if self.peak is not None and not PEAK_RANGE[0] <= self.peak <= PEAK_RANGE[1]:
            raise InvalidArgumentError(f"peak must lie in {PEAK_RANGE}")


def sample_mix_params(rng: np.random.Generator) -> tuple[int, float]:
    snr = int(rng.integers(SNR_RANGE[0], SNR_RANGE[1] + 1))
    peak = float(rng.uniform(*PEAK_RANGE))
    return snr, peak


def fit_length(noise: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded random crop when too long, tiling when too short."""
    if len(noise) == 0:
        raise MixError("empty noise signal")
    if len(noise) > length:
        start = int(rng.integers(0, len(noise) - length + 1))
        return noise[start:start + length]
    if len(noise) < length:
        reps = int(np.ceil(length / len(noise)))
        return np.tile(noise, reps)[:length]
    return noise


def mix_signals(
    clean: np.ndarray,
    noises: list[np.ndarray],
    snr_db: int,
    peak: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (mixture, scaled clean, scaled noise), all peak-aligned.

    The clean/noise components are returned after the same global peak
    scaling as the mixture, so SNR-sensitive oracles can be built on them.
    """
    clean = np.asarray(clean, dtype=np.float64)
    total_noise = np.zeros_like(clean)
    for n in noises:
        n = np.asarray(n, dtype=np.float64)
        if n.shape != clean.shape:
            raise InvalidArgumentError("noise length must match clean length")
        total_noise += n
    p_clean = float(np.mean(clean ** 2))
    p_noise = float(np.mean(total_noise ** 2))
    if p_clean <= 0.0:
        raise MixError("clean signal is silent; cannot set an SNR")
    if p_noise <= 0.0:
        raise MixError("summed noise is silent; cannot set an SNR")
    gain = np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    noise_scaled = gain * total_noise
    mixture = clean + noise_scaled
    top = float(np.max(np.abs(mixture)))
    if top <= 0.0:
        raise MixError("mixture is silent; cannot peak-normalize")
    scale = peak / top
    return (
        (mixture * scale).astype(np.float32),
        (clean * scale).astype(np.float32),
        (noise_scaled * scale).astype(np.float32),
    )


def mix(
    clean: AudioBuffer,
    noises: list[AudioBuffer],
    snr_db: int | None = None,
    peak: float | None = None,
    seed: int = 0,
) -> tuple[AudioBuffer, int, float]:
    """Full mixing recipe on audio buffers; returns (mixture, snr, peak)."""
    rng = np.random.default_rng(seed)
    for n in noises:
        if n.sample_rate != clean.sample_rate:
            raise InvalidArgumentError("noise sample rate differs from clean")
    sampled_snr, sampled_peak = sample_mix_params(rng)
    snr_db = sampled_snr if snr_db is None else int(snr_db)
    peak = sampled_peak if peak is None else float(peak)
    MixSpec(clean="-", noises=["-"] * len(noises), snr_db=snr_db, peak=peak)
    fitted = [fit_length(n.samples, len(clean.samples), rng) for n in noises]
    mixture, _, _ = mix_signals(clean.samples, fitted, snr_db, peak)
    return AudioBuffer(mixture, clean.sample_rate), snr_db, peak


def segment_samples(x: np.ndarray, segment_len: int) -> list[np.ndarray]:
    """Split into fixed-length segments, zero-padding at the beginning."""
    if segment_len <= 0:
        raise InvalidArgumentError("segment length must be positive")
    pad = (-len(x)) % segment_len
    padded = np.concatenate([np.zeros(pad, dtype=np.float32), np.asarray(x, np.float32)])
    return [padded[i:i + segment_len] for i in range(0, len(padded), segment_len)]
