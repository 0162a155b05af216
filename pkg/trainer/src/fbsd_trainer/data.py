"""Synthetic desk-scale data following the corpus mixing recipe.

"Speech" is a harmonic stack with slow amplitude modulation and a random
fundamental; noise is white or pink. Each item mixes one or two noises
into the clean signal at an integer SNR drawn from [-10, 25] dB, then
scales the mixture peak to a random value in [0.001, 0.999].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SNR_RANGE = (-10, 25)
PEAK_RANGE = (0.001, 0.999)


def synth_speech(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    t = np.arange(n) / sr
    f0 = rng.uniform(120.0, 320.0)
    sig = np.zeros(n)
    for k in range(1, 6):
        sig += (0.6 / k) * np.sin(2 * np.pi * f0 * k * t + rng.uniform(0, 2 * np.pi))
    am = 0.5 + 0.5 * np.sin(2 * np.pi * rng.uniform(1.5, 4.0) * t + rng.uniform(0, 6))
    out = sig * am
    return (0.5 * out / np.max(np.abs(out))).astype(np.float32)


def synth_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    white = rng.normal(0.0, 1.0, n)
    if rng.uniform() < 0.5:
        # pink-ish: leaky integrator over white noise
        out = np.empty(n)
        acc = 0.0
        for i in range(n):
            acc = 0.98 * acc + white[i]
            out[i] = acc
        white = out
    return (0.3 * white / np.max(np.abs(white))).astype(np.float32)


@dataclass
class MixturePair:
    mixture: np.ndarray
    clean: np.ndarray
    snr_db: int


def make_pair(rng: np.random.Generator, n: int, sr: int) -> MixturePair:
    clean = synth_speech(rng, n, sr).astype(np.float64)
    noise = synth_noise(rng, n).astype(np.float64)
    if rng.uniform() < 0.5:
        noise = noise + synth_noise(rng, n).astype(np.float64)
    snr_db = int(rng.integers(SNR_RANGE[0], SNR_RANGE[1] + 1))
    gain = np.sqrt(
        np.mean(clean ** 2) / (np.mean(noise ** 2) * 10.0 ** (snr_db / 10.0))
    )
    mixture = clean + gain * noise
    peak = rng.uniform(*PEAK_RANGE)
    scale = peak / np.max(np.abs(mixture))
    return MixturePair(
        mixture=(mixture * scale).astype(np.float32),
        clean=(clean * scale).astype(np.float32),
        snr_db=snr_db,
    )


def make_dataset(count: int, seconds: float, sr: int, seed: int) -> list[MixturePair]:
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sr))
    return [make_pair(rng, n, sr) for _ in range(count)]
