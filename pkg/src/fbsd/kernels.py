"""Self-contained neural-network primitives used by the streaming engine.

Conventions, fixed so that externally trained weights transfer bit-for-bit:

* a "Tensor2" is a float32 ndarray of shape (channels, features);
* convolution is cross-correlation (no kernel flip);
* weight layouts: conv1d (out, in, K), depthwise conv1d (C, 1, K),
  conv2d (out, in, K_time, K_freq), transposed conv1d (in, out, K);
* GRU gates are ordered (reset, update, candidate) with separate input
  and hidden biases;
* "same" padding with stride 2 and an odd kernel puts the extra zero on
  the left (earlier-feature) side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


def hard_swish(x: np.ndarray) -> np.ndarray:
    """x * clamp(x + 3, 0, 6) / 6, elementwise."""
    x = np.asarray(x)
    return (x * np.clip(x + 3.0, 0.0, 6.0) / 6.0).astype(x.dtype, copy=False)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    # exp(-|x|) never overflows; recombine by sign
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)


def affine(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """y = W x + b for a vector x; weight is (out, in)."""
    x = np.asarray(x)
    if weight.ndim != 2 or x.shape != (weight.shape[1],):
        raise InvalidArgumentError(
            f"affine: x {x.shape} incompatible with weight {weight.shape}"
        )
    if bias.shape != (weight.shape[0],):
        raise InvalidArgumentError(
            f"affine: bias {bias.shape} incompatible with weight {weight.shape}"
        )
    return weight @ x + bias


def same_pad(features: int, kernel: int, stride: int) -> tuple[int, int]:
    """Left/right zero padding so output features = ceil(features/stride).

    The extra zero for odd totals goes on the left.
    """
    total = max((int(np.ceil(features / stride)) - 1) * stride + kernel - features, 0)
    return (total + 1) // 2, total // 2


@dataclass
class ConvParams:
    """Parameters of a 1D or 2D convolution.

    ``kernel`` and ``padding`` are ints/pairs for 1D and pairs/quadruples
    (time then frequency) for 2D. ``bias`` may be None (layers followed by
    a normalization carry no bias).
    """

    in_channels: int
    out_channels: int
    kernel: int | tuple[int, int]
    stride: int = 1
    padding: tuple[int, ...] = (0, 0)
    depthwise: bool = False
    transposed: bool = False
    weight: np.ndarray | None = None
    bias: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.depthwise and self.in_channels != self.out_channels:
            raise InvalidArgumentError("depthwise conv requires in_channels == out_channels")
        if self.depthwise and self.transposed:
            raise InvalidArgumentError("depthwise transposed conv not supported")
        if self.weight is None:
            raise InvalidArgumentError("conv weight is required")
        expect = self._weight_shape()
        if tuple(self.weight.shape) != expect:
            raise InvalidArgumentError(
                f"conv weight shape {self.weight.shape} != expected {expect}"
            )
        if self.bias is not None and self.bias.shape != (self.out_channels,):
            raise InvalidArgumentError("conv bias must have out_channels entries")

    def _weight_shape(self) -> tuple[int, ...]:
        if isinstance(self.kernel, tuple):
            return (self.out_channels, self.in_channels) + tuple(self.kernel)
        if self.depthwise:
            return (self.out_channels, 1, self.kernel)
        if self.transposed:
            return (self.in_channels, self.out_channels, self.kernel)
        return (self.out_channels, self.in_channels, self.kernel)


def conv1d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Cross-correlation over the feature axis of a (channels, features) array."""
    if p.transposed:
        raise InvalidArgumentError("conv1d: params are transposed, use conv_transpose1d")
    if x.ndim != 2 or x.shape[0] != p.in_channels:
        raise InvalidArgumentError(
            f"conv1d: input {x.shape} incompatible with in_channels={p.in_channels}"
        )
    pl, pr = p.padding
    k, s = int(p.kernel), p.stride
    f_pad = x.shape[1] + pl + pr
    if f_pad < k:
        raise InvalidArgumentError("conv1d: padded feature length shorter than kernel")
    if k == 1 and s == 1 and not pl and not pr and not p.depthwise:
        out = p.weight[:, :, 0] @ x
        if p.bias is not None:
            out += p.bias[:, None]
        return out
    if pl or pr:
        xp = np.zeros((x.shape[0], f_pad), dtype=x.dtype)
        xp[:, pl:pl + x.shape[1]] = x
        x = xp
    f_out = (f_pad - k) // s + 1
    out = np.zeros((p.out_channels, f_out), dtype=np.float32)
    if p.depthwise:
        w = p.weight[:, 0, :]  # (C, K)
        for j in range(k):
            out += w[:, j:j + 1] * x[:, j:j + s * f_out:s]
    else:
        for j in range(k):
            out += p.weight[:, :, j] @ x[:, j:j + s * f_out:s]
    if p.bias is not None:
        out += p.bias[:, None]
    return out


def conv_transpose1d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Exact adjoint of conv1d with the same kernel/stride/padding.

    Output features = (F_in - 1) * stride + kernel - pad_left - pad_right.
    """
    if not p.transposed:
        raise InvalidArgumentError("conv_transpose1d: params are not transposed")
    if x.ndim != 2 or x.shape[0] != p.in_channels:
        raise InvalidArgumentError(
            f"conv_transpose1d: input {x.shape} incompatible with in_channels={p.in_channels}"
        )
    pl, pr = p.padding
    k, s = int(p.kernel), p.stride
    f_in = x.shape[1]
    full = (f_in - 1) * s + k
    f_out = full - pl - pr
    if f_out <= 0:
        raise InvalidArgumentError("conv_transpose1d: non-positive output length")
    # one contraction for all taps, then K strided scatters
    taps = np.tensordot(p.weight, x, axes=(0, 0))  # (out, K, F_in)
    out = np.zeros((p.out_channels, full), dtype=np.float32)
    for j in range(k):
        out[:, j:j + s * f_in:s] += taps[:, j, :]
    out = out[:, pl:pl + f_out].copy()
    if p.bias is not None:
        out += p.bias[:, None]
    return out


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """2D cross-correlation over (channels, time, features), stride 1.

    Used for the kernels that span look-back frames: time is consumed
    "valid" (no time padding), frequency follows ``p.padding[2:4]``.
    """
    if x.ndim != 3 or x.shape[0] != p.in_channels:
        raise InvalidArgumentError(
            f"conv2d: input {x.shape} incompatible with in_channels={p.in_channels}"
        )
    kt, kf = p.kernel  # type: ignore[misc]
    pt, pb, pl, pr = p.padding
    if pt or pb or pl or pr:
        xp = np.zeros(
            (x.shape[0], x.shape[1] + pt + pb, x.shape[2] + pl + pr), dtype=x.dtype
        )
        xp[:, pt:pt + x.shape[1], pl:pl + x.shape[2]] = x
        x = xp
    t_out = x.shape[1] - kt + 1
    f_out = x.shape[2] - kf + 1
    if t_out <= 0 or f_out <= 0:
        raise InvalidArgumentError("conv2d: kernel larger than padded input")
    out = np.zeros((p.out_channels, t_out, f_out), dtype=np.float32)
    w = p.weight  # (out, in, kt, kf)
    if t_out == 1:
        # kernel consumes the whole time window; contract time in one go
        acc = np.zeros((p.out_channels, f_out), dtype=np.float32)
        for j in range(kf):
            acc += np.tensordot(w[:, :, :, j], x[:, :, j:j + f_out], axes=([1, 2], [0, 1]))
        out[:, 0, :] = acc
    else:
        for i in range(kt):
            for j in range(kf):
                patch = x[:, i:i + t_out, j:j + f_out]
                out += np.tensordot(w[:, :, i, j], patch, axes=(1, 0))
    if p.bias is not None:
        out += p.bias[:, None, None]
    return out


def causal_instance_norm(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    eps: float = 1e-5,
) -> np.ndarray:
    """Normalize each channel by its own mean/variance over features.

    Statistics are computed within the current frame only, so no future
    information is used. A 1D input is treated as a single channel.
    """
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    mu = x.mean(axis=1)
    centered = x - mu[:, None]
    var = np.einsum("cf,cf->c", centered, centered) / x.shape[1]
    scale = gamma / np.sqrt(var + eps)
    y = (centered * scale[:, None] + beta[:, None]).astype(np.float32, copy=False)
    return y[0] if squeeze else y


@dataclass
class GruParams:
    """Single-layer GRU cell weights, gate order (reset, update, candidate)."""

    input_size: int
    hidden_size: int
    weight_ih: np.ndarray  # (3H, input)
    weight_hh: np.ndarray  # (3H, H)
    bias_ih: np.ndarray    # (3H,)
    bias_hh: np.ndarray    # (3H,)

    def __post_init__(self) -> None:
        h, i = self.hidden_size, self.input_size
        if (self.weight_ih.shape != (3 * h, i) or self.weight_hh.shape != (3 * h, h)
                or self.bias_ih.shape != (3 * h,) or self.bias_hh.shape != (3 * h,)):
            raise InvalidArgumentError("GRU weight shapes inconsistent with sizes")


def gru_step(x: np.ndarray, p: GruParams, hidden: np.ndarray) -> np.ndarray:
    """One GRU update; returns the new hidden state.

    r = sigma(W_ir x + b_ir + W_hr h + b_hr)
    z = sigma(W_iz x + b_iz + W_hz h + b_hz)
    n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
    h' = (1 - z) * n + z * h
    """
    if x.shape != (p.input_size,) or hidden.shape != (p.hidden_size,):
        raise InvalidArgumentError("gru_step: input/state dims disagree with params")
    h = p.hidden_size
    gi = p.weight_ih @ x + p.bias_ih
    gh = p.weight_hh @ hidden + p.bias_hh
    r = sigmoid(gi[:h] + gh[:h])
    z = sigmoid(gi[h:2 * h] + gh[h:2 * h])
    n = np.tanh(gi[2 * h:] + r * gh[2 * h:])
    return ((1.0 - z) * n + z * hidden).astype(np.float32, copy=False)
