"""Desk-scale training loop: Adam, global-norm gradient clipping,
plateau LR reduction and early stopping, with negative SI-SDR through the
mask + iSTFT (noisy phase) as the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .config import TrainConfig
from .data import MixturePair
from .dsp import istft, si_sdr_db, si_sdr_loss, stft_mag_phase
from .model import ReferenceDenoiser


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the last good diagnostics."""


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_si_sdr: float
    learning_rate: float
    grad_norm_max: float   # pre-clip global norm, largest this epoch
    grad_clipped: bool


@dataclass
class TrainResult:
    log: list[EpochLog] = field(default_factory=list)
    baseline_si_sdr: float = float("nan")
    best_val_si_sdr: float = float("-inf")
    steps: int = 0

    @property
    def improvement_db(self) -> float:
        return self.best_val_si_sdr - self.baseline_si_sdr


def clip_gradients(model: torch.nn.Module, max_norm: float) -> float:
    """Clip to a global 2-norm; returns the pre-clip norm."""
    return float(torch.nn.utils.clip_grad_norm_(model.parameters(), max_norm))


def _batches(items: list[MixturePair], batch_size: int, rng: np.random.Generator):
    order = rng.permutation(len(items))
    for lo in range(0, len(items), batch_size):
        chunk = [items[i] for i in order[lo: lo + batch_size]]
        mix = torch.from_numpy(np.stack([c.mixture for c in chunk]))
        clean = torch.from_numpy(np.stack([c.clean for c in chunk]))
        yield mix, clean


def denoise_batch(model: ReferenceDenoiser, mixture: torch.Tensor) -> torch.Tensor:
    """Mask the mixture magnitudes and resynthesize with the noisy phase."""
    mag, phase = stft_mag_phase(mixture, model.spec.fft_size)
    mask = model(mag)
    return istft(mask * mag, phase, model.spec.fft_size, mixture.shape[-1])


@torch.no_grad()
def validate_si_sdr(model: ReferenceDenoiser, items: list[MixturePair]) -> float:
    model.eval()
    mix = torch.from_numpy(np.stack([c.mixture for c in items]))
    clean = torch.from_numpy(np.stack([c.clean for c in items]))
    est = denoise_batch(model, mix)
    model.train()
    return float(si_sdr_db(est, clean).mean())


def identity_baseline_si_sdr(items: list[MixturePair]) -> float:
    mix = torch.from_numpy(np.stack([c.mixture for c in items]))
    clean = torch.from_numpy(np.stack([c.clean for c in items]))
    return float(si_sdr_db(mix, clean).mean())


def train_desk_scale(
    model: ReferenceDenoiser,
    train_items: list[MixturePair],
    val_items: list[MixturePair],
    tc: TrainConfig,
) -> TrainResult:
    torch.manual_seed(tc.seed)
    rng = np.random.default_rng(tc.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=tc.learning_rate)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, mode="max", factor=tc.lr_factor, patience=tc.lr_patience_epochs
    )
    result = TrainResult(baseline_si_sdr=identity_baseline_si_sdr(val_items))
    epochs_since_best = 0
    model.train()
    for epoch in range(tc.epochs):
        losses = []
        grad_max = 0.0
        clipped = False
        for mix, clean in _batches(train_items, tc.batch_size, rng):
            optimizer.zero_grad()
            est = denoise_batch(model, mix)
            loss = si_sdr_loss(est, clean)
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {result.steps}; "
                    f"last losses: {losses[-5:]}"
                )
            loss.backward()
            norm = clip_gradients(model, tc.grad_clip_norm)
            grad_max = max(grad_max, norm)
            clipped = clipped or norm > tc.grad_clip_norm
            optimizer.step()
            losses.append(float(loss.detach()))
            result.steps += 1
            if tc.steps_per_epoch and len(losses) >= tc.steps_per_epoch:
                break
        val = validate_si_sdr(model, val_items)
        scheduler.step(val)
        result.log.append(EpochLog(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            val_si_sdr=val,
            learning_rate=float(optimizer.param_groups[0]["lr"]),
            grad_norm_max=grad_max,
            grad_clipped=clipped,
        ))
        if val > result.best_val_si_sdr:
            result.best_val_si_sdr = val
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= tc.early_stop_patience_epochs:
                break
    return result
