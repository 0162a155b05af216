"""Differentiable STFT/iSTFT matching the engine's framing conventions.

Square-root periodic Hann analysis and synthesis windows, 50% overlap,
left pre-pad of one hop so frame t covers samples up to t*hop + hop, and
zero padding of the trailing partial hop. The inverse transform trims the
pre-pad and returns exactly the original sample count.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F


def sqrt_hann(fft_size: int, device=None) -> torch.Tensor:
    n = torch.arange(fft_size, dtype=torch.float64, device=device)
    w = torch.sqrt(0.5 * (1.0 - torch.cos(2.0 * math.pi * n / fft_size)))
    return w.to(torch.float32)


def frame_count(n_samples: int, hop: int) -> int:
    return int(math.ceil(n_samples / hop))


def stft_mag_phase(x: torch.Tensor, fft_size: int) -> tuple[torch.Tensor, torch.Tensor]:
    """(B, n) waveforms -> magnitude and phase of shape (B, T, bins)."""
    hop = fft_size // 2
    b, n = x.shape
    t_frames = frame_count(n, hop)
    total = (t_frames - 1) * hop + fft_size
    pad_right = total - (fft_size - hop) - n
    xp = F.pad(x, (fft_size - hop, pad_right))
    frames = xp.unfold(dimension=1, size=fft_size, step=hop)  # (B, T, fft)
    win = sqrt_hann(fft_size, device=x.device)
    spec = torch.fft.rfft(frames * win, dim=-1)
    return torch.abs(spec), torch.angle(spec)


def istft(mag: torch.Tensor, phase: torch.Tensor, fft_size: int, n_samples: int) -> torch.Tensor:
    """Inverse of :func:`stft_mag_phase`; returns (B, n_samples)."""
    hop = fft_size // 2
    spec = torch.polar(mag, phase)
    frames = torch.fft.irfft(spec, n=fft_size, dim=-1)
    win = sqrt_hann(fft_size, device=mag.device)
    frames = frames * win
    b, t_frames, _ = frames.shape
    length = (t_frames - 1) * hop + fft_size
    out = F.fold(
        frames.transpose(1, 2),  # (B, fft, T)
        output_size=(length, 1),
        kernel_size=(fft_size, 1),
        stride=(hop, 1),
    ).squeeze(-1).squeeze(1)
    return out[:, fft_size - hop: fft_size - hop + n_samples]


def si_sdr_db(est: torch.Tensor, ref: torch.Tensor) -> torch.Tensor:
    """Per-item scale-invariant SDR in dB for (B, n) tensors."""
    ref_energy = (ref * ref).sum(dim=-1, keepdim=True).clamp_min(1e-12)
    alpha = (est * ref).sum(dim=-1, keepdim=True) / ref_energy
    target = alpha * ref
    resid = est - target
    num = (target * target).sum(dim=-1).clamp_min(1e-12)
    den = (resid * resid).sum(dim=-1).clamp_min(1e-12)
    return 10.0 * torch.log10(num / den)


def si_sdr_loss(est: torch.Tensor, ref: torch.Tensor) -> torch.Tensor:
    """Negative mean SI-SDR, the training objective."""
    return -si_sdr_db(est, ref).mean()
