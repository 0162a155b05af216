"""Model architecture configuration and derived layer geometry."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import InvalidArgumentError

SAMPLE_RATE = 48000
FFT_SIZE = 2048
HOP = FFT_SIZE // 2


@dataclass(frozen=True)
class ModelConfig:
    """All architecture hyper-parameters of the denoiser.

    Defaults reproduce the full-size model; any consistent override is
    accepted (tiny configurations are used for fast tests and desk-scale
    training). Encoder block ``i`` applies a pointwise expansion to
    ``expand_channels``, a depthwise conv with ``kernels[i]`` and
    ``strides[i]``, and a pointwise projection to ``block_channels[i]``.
    """

    n_bins: int = 1025                 # F, one-sided STFT bins
    n_features: int = 96               # F', reduced working dimensionality
    lookback: int = 32                 # T_pad, encoder look-back frames
    mask_lookback: int = 3             # T_M, mask-head look-back frames
    kernels: tuple[int, ...] = (5, 3, 5, 3, 5, 3)
    strides: tuple[int, ...] = (2, 1, 2, 1, 2, 2)
    expand_channels: int = 256
    block_channels: tuple[int, ...] = (16, 16, 16, 16, 16, 64)
    entry_freq_kernel: int = 3
    gru_hidden: int = 64               # bottleneck GRU width
    ae_hidden: int = 48                # autoencoder reduced width
    decoder_channels: int = 64
    mask_freq_kernel: int = 3
    norm_eps: float = 1e-5

    def __post_init__(self) -> None:
        if self.n_bins <= 0 or self.n_features <= 0:
            raise InvalidArgumentError("n_bins and n_features must be positive")
        if self.lookback < 0 or self.mask_lookback < 0:
            raise InvalidArgumentError("look-back lengths must be non-negative")
        if self.lookback < self.mask_lookback:
            raise InvalidArgumentError("lookback must be >= mask_lookback")
        n = len(self.kernels)
        if n == 0 or len(self.strides) != n or len(self.block_channels) != n:
            raise InvalidArgumentError(
                "kernels, strides and block_channels must have equal, non-zero length"
            )
        if any(k <= 0 for k in self.kernels) or any(s <= 0 for s in self.strides):
            raise InvalidArgumentError("kernels and strides must be positive")
        f = self.n_features
        for s in self.strides:
            if f % s != 0:
                raise InvalidArgumentError(
                    f"feature size {f} not divisible by stride {s}"
                )
            f //= s
        if self.gru_hidden != self.block_channels[-1]:
            raise InvalidArgumentError(
                "gru_hidden must equal the last encoder block's channels"
            )
        if min(self.expand_channels, self.gru_hidden, self.ae_hidden,
               self.decoder_channels, self.entry_freq_kernel,
               self.mask_freq_kernel) <= 0:
            raise InvalidArgumentError("channel widths and kernels must be positive")

    # -- derived geometry ------------------------------------------------

    @property
    def n_blocks(self) -> int:
        return len(self.kernels)

    @property
    def entry_channels(self) -> int:
        # the entry 2D conv maps the look-back window into this many channels
        return self.lookback

    @property
    def encoder_in_channels(self) -> tuple[int, ...]:
        return (self.entry_channels,) + tuple(self.block_channels[:-1])

    @property
    def encoder_features(self) -> tuple[int, ...]:
        """Feature sizes entering each encoder block, plus the final size."""
        sizes = [self.n_features]
        for s in self.strides:
            sizes.append(sizes[-1] // s)
        return tuple(sizes)

    @property
    def decoder_kernels(self) -> tuple[int, ...]:
        return tuple(reversed(self.kernels))

    @property
    def decoder_strides(self) -> tuple[int, ...]:
        return tuple(reversed(self.strides))

    @property
    def decoder_features(self) -> tuple[int, ...]:
        """Feature sizes entering each decoder block, plus the final F'."""
        return tuple(reversed(self.encoder_features))

    @property
    def skip_channels(self) -> tuple[int, ...]:
        """Channels of the encoder output wired into decoder block d."""
        return tuple(reversed(self.block_channels))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        kwargs = dict(d)
        for key in ("kernels", "strides", "block_channels"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def tiny_config() -> ModelConfig:
    """A small configuration for fast tests and desk-scale training."""
    return ModelConfig(
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
