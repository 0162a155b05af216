"""Differentiable reference implementation of the streaming denoiser.

Layer-for-layer identical to the inference engine: same normalization
definition, padding sides, gate ordering and bias placement, so exported
weights reproduce the engine's activations to float precision. The model
runs on whole sequences with causal time padding; module attribute names
are chosen so ``state_dict()`` keys equal the weight-file tensor names
(up to the GRU ``_l0`` suffix stripped at export).
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from .config import ModelSpec


def same_pad(features: int, kernel: int, stride: int) -> tuple[int, int]:
    """Extra zero on the left for odd totals, mirroring the engine."""
    total = max((math.ceil(features / stride) - 1) * stride + kernel - features, 0)
    return (total + 1) // 2, total // 2


class FrameNorm(nn.Module):
    """Per-frame, per-channel normalization over the feature axis."""

    def __init__(self, channels: int, eps: float):
        super().__init__()
        self.eps = eps
        self.gamma = nn.Parameter(torch.ones(channels))
        self.beta = nn.Parameter(torch.zeros(channels))

    def forward(self, x: torch.Tensor) -> torch.Tensor:  # (N, C, F)
        mu = x.mean(dim=-1, keepdim=True)
        var = x.var(dim=-1, unbiased=False, keepdim=True)
        y = (x - mu) / torch.sqrt(var + self.eps)
        return self.gamma[None, :, None] * y + self.beta[None, :, None]


class MapIn(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.norm_in = FrameNorm(1, spec.norm_eps)
        self.fc = nn.Linear(spec.n_bins, spec.n_features)
        self.norm_out = FrameNorm(1, spec.norm_eps)

    def forward(self, mags: torch.Tensor) -> torch.Tensor:  # (B, T, F) -> (B, T, F')
        b, t, f = mags.shape
        h = self.norm_in(mags.reshape(b * t, 1, f))[:, 0, :]
        h = self.fc(h)
        h = self.norm_out(h.unsqueeze(1))[:, 0, :]
        return F.hardswish(h).view(b, t, -1)


class EntryBlock(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.conv = nn.Conv2d(
            1, spec.lookback, (spec.lookback + 1, spec.entry_freq_kernel), bias=False
        )
        self.norm = FrameNorm(spec.lookback, spec.norm_eps)
        self._pad = same_pad(spec.n_features, spec.entry_freq_kernel, 1)

    def forward(self, hist: torch.Tensor) -> torch.Tensor:
        # hist: (B, 1, T + lookback, F') -> (B*T, C, F')
        y = self.conv(F.pad(hist, self._pad))
        b, c, t, f = y.shape
        y = y.permute(0, 2, 1, 3).reshape(b * t, c, f)
        return F.hardswish(self.norm(y))


class EncoderBlock(nn.Module):
    def __init__(self, spec: ModelSpec, c_in: int, c_out: int, kernel: int,
                 stride: int, f_in: int):
        super().__init__()
        ce = spec.expand_channels
        self.expand = nn.Conv1d(c_in, ce, 1, bias=False)
        self.norm1 = FrameNorm(ce, spec.norm_eps)
        self.depthwise = nn.Conv1d(ce, ce, kernel, stride=stride, groups=ce, bias=False)
        self.norm2 = FrameNorm(ce, spec.norm_eps)
        self.project = nn.Conv1d(ce, c_out, 1, bias=False)
        self.norm3 = FrameNorm(c_out, spec.norm_eps)
        self._pad = same_pad(f_in, kernel, stride)

    def forward(self, z: torch.Tensor) -> torch.Tensor:  # (N, C, F)
        z = F.hardswish(self.norm1(self.expand(z)))
        z = F.hardswish(self.norm2(self.depthwise(F.pad(z, self._pad))))
        # projection back down has no nonlinearity
        return self.norm3(self.project(z))


class Bottleneck(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        f_enc = spec.encoder_features[-1]
        c_last = spec.block_channels[-1]
        self.reduce = nn.Conv1d(f_enc, 1, 1)
        self.gru = nn.GRU(c_last, spec.gru_hidden, num_layers=1, batch_first=True)
        self.expand = nn.Conv1d(1, f_enc, 1)

    def forward(self, z: torch.Tensor, bt: tuple[int, int]) -> torch.Tensor:
        b, t = bt
        vec = self.reduce(z.transpose(1, 2))[:, 0, :]      # (N, C_last)
        out, _ = self.gru(vec.view(b, t, -1))              # (B, T, H)
        e = self.expand(out.reshape(b * t, 1, -1))         # (N, F_enc, H)
        return e.transpose(1, 2).contiguous()              # (N, H, F_enc)


class DecoderBlock(nn.Module):
    def __init__(self, spec: ModelSpec, c_in: int, kernel: int, stride: int,
                 f_out: int):
        super().__init__()
        d = spec.decoder_channels
        self.fuse = nn.Conv1d(c_in, d, 1, bias=False)
        self.norm1 = FrameNorm(d, spec.norm_eps)
        self.tconv = nn.ConvTranspose1d(d, d, kernel, stride=stride, bias=False)
        self.norm2 = FrameNorm(d, spec.norm_eps)
        # crop the full transposed output by the matching forward-conv pads
        self._crop = same_pad(f_out, kernel, stride)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        z = F.hardswish(self.norm1(self.fuse(z)))
        full = self.tconv(z)
        pl, pr = self._crop
        z = full[:, :, pl: full.shape[-1] - pr]
        return F.hardswish(self.norm2(z))


class AutoEncoder(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.fc_in = nn.Linear(spec.n_features, spec.ae_hidden)
        self.norm_in = FrameNorm(1, spec.norm_eps)
        self.gru = nn.GRU(spec.ae_hidden, spec.ae_hidden, num_layers=1, batch_first=True)
        self.fc_out = nn.Linear(spec.ae_hidden, spec.n_features)
        self.norm_out = FrameNorm(1, spec.norm_eps)

    def forward(self, h_dec: torch.Tensor, bt: tuple[int, int]) -> torch.Tensor:
        b, t = bt
        z = self.fc_in(h_dec)
        z = F.hardswish(self.norm_in(z.unsqueeze(1))[:, 0, :])
        out, _ = self.gru(z.view(b, t, -1))
        z = self.fc_out(out.reshape(b * t, -1))
        return self.norm_out(z.unsqueeze(1))[:, 0, :]      # (N, F')


class MaskHead(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.conv = nn.Conv2d(2, 1, (spec.mask_lookback + 1, spec.mask_freq_kernel))
        self._pad = same_pad(spec.n_features, spec.mask_freq_kernel, 1)

    def forward(self, stack: torch.Tensor) -> torch.Tensor:
        # stack: (B, 2, T + mask_lookback, F') -> (B, T, F')
        return self.conv(F.pad(stack, self._pad))[:, 0, :, :]


class MapOut(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.fc = nn.Linear(spec.n_features, spec.n_bins)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.fc(h))


class ReferenceDenoiser(nn.Module):
    """Sequence-mode model predicting one [0, 1] mask per frame."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.map_in = MapIn(spec)
        encoder = nn.Module()
        encoder.entry = EntryBlock(spec)
        feats = spec.encoder_features
        for i, (k, s, c_in, c_out) in enumerate(
            zip(spec.kernels, spec.strides, spec.encoder_in_channels,
                spec.block_channels), start=1,
        ):
            setattr(encoder, f"block{i}", EncoderBlock(spec, c_in, c_out, k, s, feats[i - 1]))
        self.encoder = encoder
        self.bottleneck = Bottleneck(spec)
        decoder = nn.Module()
        dec_kernels = tuple(reversed(spec.kernels))
        dec_strides = tuple(reversed(spec.strides))
        dec_feats = tuple(reversed(feats))
        skip_channels = tuple(reversed(spec.block_channels))
        c_last = spec.block_channels[-1]
        for i, (k, s, c_skip) in enumerate(
            zip(dec_kernels, dec_strides, skip_channels), start=1
        ):
            c_prev = c_last if i == 1 else spec.decoder_channels
            setattr(decoder, f"block{i}",
                    DecoderBlock(spec, c_prev + c_skip, k, s, dec_feats[i]))
        decoder.collapse = nn.Conv1d(spec.decoder_channels, 1, 1)
        self.decoder = decoder
        self.ae = AutoEncoder(spec)
        self.mask = MaskHead(spec)
        self.map_out = MapOut(spec)

    def forward(self, mags: torch.Tensor, trace: dict | None = None) -> torch.Tensor:
        spec = self.spec
        b, t, _ = mags.shape
        h = self.map_in(mags)                                        # (B, T, F')
        hist = F.pad(h, (0, 0, spec.lookback, 0)).unsqueeze(1)
        z = self.encoder.entry(hist)                                 # (N, C, F')
        skips = []
        for i in range(1, spec.n_blocks + 1):
            z = getattr(self.encoder, f"block{i}")(z)
            skips.append(z)
        h_enc = z
        z = self.bottleneck(z, (b, t))
        h_bott = z
        for i in range(1, spec.n_blocks + 1):
            z = getattr(self.decoder, f"block{i}")(
                torch.cat([z, skips[spec.n_blocks - i]], dim=1)
            )
        h_dec = self.decoder.collapse(z)[:, 0, :]                    # (N, F')
        h_ae = self.ae(h_dec, (b, t))                                # (N, F')
        ae_seq = h_ae.view(b, t, -1)
        stack = torch.stack(
            [
                F.pad(h, (0, 0, spec.mask_lookback, 0)),
                F.pad(ae_seq, (0, 0, spec.mask_lookback, 0)),
            ],
            dim=1,
        )
        h_mask = self.mask(stack)                                    # (B, T, F')
        out_mask = self.map_out(h_mask)                              # (B, T, F)
        if trace is not None:
            f_enc = spec.encoder_features[-1]
            c_last = spec.block_channels[-1]
            trace["h_map_in"] = h[0]
            trace["h_enc"] = h_enc.view(b, t, c_last, f_enc)[0]
            trace["h_bott"] = h_bott.view(b, t, c_last, f_enc)[0]
            trace["h_dec"] = h_dec.view(b, t, -1)[0]
            trace["h_ae"] = ae_seq[0]
            trace["h_mask"] = h_mask[0]
            trace["mask"] = out_mask[0]
        return out_mask

    def n_params(self) -> int:
        return sum(p.numel() for p in self.parameters())
