"""Architecture and training configuration.

``ModelSpec`` mirrors the configuration block of the engine's weight file
(docs/WEIGHT_FORMAT.md in the engine repository); the field names are the
serialization contract and must not drift.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class ModelSpec:
    n_bins: int = 1025
    n_features: int = 96
    lookback: int = 32
    mask_lookback: int = 3
    kernels: tuple[int, ...] = (5, 3, 5, 3, 5, 3)
    strides: tuple[int, ...] = (2, 1, 2, 1, 2, 2)
    expand_channels: int = 256
    block_channels: tuple[int, ...] = (16, 16, 16, 16, 16, 64)
    entry_freq_kernel: int = 3
    gru_hidden: int = 64
    ae_hidden: int = 48
    decoder_channels: int = 64
    mask_freq_kernel: int = 3
    norm_eps: float = 1e-5

    def __post_init__(self) -> None:
        n = len(self.kernels)
        if len(self.strides) != n or len(self.block_channels) != n or n == 0:
            raise ValueError("kernels, strides, block_channels must align")
        f = self.n_features
        for s in self.strides:
            if f % s:
                raise ValueError(f"feature size {f} not divisible by stride {s}")
            f //= s
        if self.gru_hidden != self.block_channels[-1]:
            raise ValueError("gru_hidden must equal the last block's channels")
        if self.lookback < self.mask_lookback:
            raise ValueError("lookback must be >= mask_lookback")

    @property
    def fft_size(self) -> int:
        return 2 * (self.n_bins - 1)

    @property
    def hop(self) -> int:
        return self.fft_size // 2

    @property
    def n_blocks(self) -> int:
        return len(self.kernels)

    @property
    def encoder_in_channels(self) -> tuple[int, ...]:
        return (self.lookback,) + tuple(self.block_channels[:-1])

    @property
    def encoder_features(self) -> tuple[int, ...]:
        sizes = [self.n_features]
        for s in self.strides:
            sizes.append(sizes[-1] // s)
        return tuple(sizes)

    def to_dict(self) -> dict:
        return asdict(self)


def tiny_spec() -> ModelSpec:
    """Desk-scale model: 512-point STFT, two encoder/decoder blocks."""
    return ModelSpec(
        n_bins=257,
        n_features=24,
        lookback=8,
        mask_lookback=3,
        kernels=(5, 3),
        strides=(2, 2),
        expand_channels=64,
        block_channels=(8, 16),
        gru_hidden=16,
        ae_hidden=12,
        decoder_channels=16,
    )


@dataclass
class TrainConfig:
    """Optimization recipe; defaults follow the published training setup."""

    batch_size: int = 32
    learning_rate: float = 1e-4
    lr_patience_epochs: int = 10
    lr_factor: float = 0.5
    early_stop_patience_epochs: int = 200
    grad_clip_norm: float = 0.5
    epochs: int = 1000
    steps_per_epoch: int | None = None  # None: one pass over the dataset
    seed: int = 0
