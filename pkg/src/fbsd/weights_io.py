"""Named weight store, binary serialization and seeded initialization.

File format (little-endian):

    bytes 0..3    magic "FBSD"
    bytes 4..7    format version (u32)
    bytes 8..11   header length H (u32)
    bytes 12..    header: UTF-8 JSON {"config": {...}, "tensors": [
                      {"name": str, "shape": [int...], "offset": int}, ...]}
    bytes 12+H..  payload: concatenated float32 tensor data, offsets in bytes

Every tensor the model defines is present exactly once; the same format is
produced verbatim by the training component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import (
    CorruptHeaderError,
    MissingTensorError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnknownTensorError,
    VersionMismatchError,
)

MAGIC = b"FBSD"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TensorSpec:
    """Shape plus the fan-in used for scaled-uniform initialization."""

    shape: tuple[int, ...]
    kind: str  # "weight" | "bias" | "gamma" | "beta"
    fan_in: int = 1


def _linear(name: str, out_dim: int, in_dim: int) -> dict[str, TensorSpec]:
    return {
        f"{name}.weight": TensorSpec((out_dim, in_dim), "weight", in_dim),
        f"{name}.bias": TensorSpec((out_dim,), "bias", in_dim),
    }


def _norm(name: str, channels: int) -> dict[str, TensorSpec]:
    return {
        f"{name}.gamma": TensorSpec((channels,), "gamma"),
        f"{name}.beta": TensorSpec((channels,), "beta"),
    }


def _gru(name: str, input_size: int, hidden: int) -> dict[str, TensorSpec]:
    return {
        f"{name}.weight_ih": TensorSpec((3 * hidden, input_size), "weight", hidden),
        f"{name}.weight_hh": TensorSpec((3 * hidden, hidden), "weight", hidden),
        f"{name}.bias_ih": TensorSpec((3 * hidden,), "bias", hidden),
        f"{name}.bias_hh": TensorSpec((3 * hidden,), "bias", hidden),
    }


def weight_layout(config: ModelConfig) -> dict[str, TensorSpec]:
    """Name -> spec for every learnable tensor, in a stable order.

    Convolutions immediately followed by a normalization carry no bias;
    affine (FNN) layers always do.
    """
    c = config
    out: dict[str, TensorSpec] = {}
    # input mapping: norm -> FNN F->F' -> norm (-> hard-swish)
    out.update(_norm("map_in.norm_in", 1))
    out.update(_linear("map_in.fc", c.n_features, c.n_bins))
    out.update(_norm("map_in.norm_out", 1))
    # encoder entry: 2D conv over the look-back window, then norm
    out["encoder.entry.conv.weight"] = TensorSpec(
        (c.entry_channels, 1, c.lookback + 1, c.entry_freq_kernel),
        "weight",
        (c.lookback + 1) * c.entry_freq_kernel,
    )
    out.update(_norm("encoder.entry.norm", c.entry_channels))
    # inverted-bottleneck encoder blocks
    for i, (k, c_in, c_out) in enumerate(
        zip(c.kernels, c.encoder_in_channels, c.block_channels), start=1
    ):
        out[f"encoder.block{i}.expand.weight"] = TensorSpec(
            (c.expand_channels, c_in, 1), "weight", c_in
        )
        out.update(_norm(f"encoder.block{i}.norm1", c.expand_channels))
        out[f"encoder.block{i}.depthwise.weight"] = TensorSpec(
            (c.expand_channels, 1, k), "weight", k
        )
        out.update(_norm(f"encoder.block{i}.norm2", c.expand_channels))
        out[f"encoder.block{i}.project.weight"] = TensorSpec(
            (c_out, c.expand_channels, 1), "weight", c.expand_channels
        )
        out.update(_norm(f"encoder.block{i}.norm3", c_out))
    # bottleneck: pointwise to a vector, GRU, pointwise back (no norms)
    f_enc = c.encoder_features[-1]
    c_last = c.block_channels[-1]
    out["bottleneck.reduce.weight"] = TensorSpec((1, f_enc, 1), "weight", f_enc)
    out["bottleneck.reduce.bias"] = TensorSpec((1,), "bias", f_enc)
    out.update(_gru("bottleneck.gru", c_last, c.gru_hidden))
    out["bottleneck.expand.weight"] = TensorSpec((f_enc, 1, 1), "weight", 1)
    out["bottleneck.expand.bias"] = TensorSpec((f_enc,), "bias", 1)
    # decoder blocks: fuse conv on concat(prev, skip), transposed conv up
    d = c.decoder_channels
    for i, (k, c_skip) in enumerate(zip(c.decoder_kernels, c.skip_channels), start=1):
        c_prev = c_last if i == 1 else d
        out[f"decoder.block{i}.fuse.weight"] = TensorSpec(
            (d, c_prev + c_skip, 1), "weight", c_prev + c_skip
        )
        out.update(_norm(f"decoder.block{i}.norm1", d))
        out[f"decoder.block{i}.tconv.weight"] = TensorSpec((d, d, k), "weight", d * k)
        out.update(_norm(f"decoder.block{i}.norm2", d))
    out["decoder.collapse.weight"] = TensorSpec((1, d, 1), "weight", d)
    out["decoder.collapse.bias"] = TensorSpec((1,), "bias", d)
    # recurrent autoencoder on the decoder output vector
    out.update(_linear("ae.fc_in", c.ae_hidden, c.n_features))
    out.update(_norm("ae.norm_in", 1))
    out.update(_gru("ae.gru", c.ae_hidden, c.ae_hidden))
    out.update(_linear("ae.fc_out", c.n_features, c.ae_hidden))
    out.update(_norm("ae.norm_out", 1))
    # mask head: 2-channel 2D conv over the short look-back, bias kept
    # (no norm or nonlinearity follows it)
    out["mask.conv.weight"] = TensorSpec(
        (1, 2, c.mask_lookback + 1, c.mask_freq_kernel),
        "weight",
        2 * (c.mask_lookback + 1) * c.mask_freq_kernel,
    )
    out["mask.conv.bias"] = TensorSpec(
        (1,), "bias", 2 * (c.mask_lookback + 1) * c.mask_freq_kernel
    )
    # output mapping: FNN F'->F, sigmoid applied by the engine
    out.update(_linear("map_out.fc", c.n_bins, c.n_features))
    return out


class ModelWeights:
    """Immutable named-tensor store validated against a configuration."""

    def __init__(self, config: ModelConfig, tensors: dict[str, np.ndarray]):
        layout = weight_layout(config)
        unknown = sorted(set(tensors) - set(layout))
        if unknown:
            raise UnknownTensorError(f"unknown tensors: {', '.join(unknown)}")
        missing = sorted(set(layout) - set(tensors))
        if missing:
            raise MissingTensorError(f"missing tensors: {', '.join(missing)}")
        store: dict[str, np.ndarray] = {}
        for name, spec in layout.items():
            arr = np.asarray(tensors[name], dtype=np.float32)
            if tuple(arr.shape) != spec.shape:
                raise ShapeMismatchError(
                    f"tensor {name}: shape {tuple(arr.shape)} != expected {spec.shape}"
                )
            store[name] = arr
        self.config = config
        self.tensors = store

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelWeights):
            return NotImplemented
        return self.config == other.config and all(
            np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors
        )

    @property
    def n_params(self) -> int:
        return sum(int(a.size) for a in self.tensors.values())


def save_bytes(weights: ModelWeights) -> bytes:
    directory = []
    payload = bytearray()
    for name, arr in weights.tensors.items():
        directory.append(
            {"name": name, "shape": list(arr.shape), "offset": len(payload)}
        )
        payload.extend(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    header = json.dumps(
        {"config": weights.config.to_dict(), "tensors": directory},
        separators=(",", ":"),
    ).encode()
    head = MAGIC + FORMAT_VERSION.to_bytes(4, "little") + len(header).to_bytes(4, "little")
    return head + header + bytes(payload)


def save(weights: ModelWeights, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(save_bytes(weights))


def load_bytes(data: bytes) -> ModelWeights:
    if len(data) < 12 or data[:4] != MAGIC:
        raise CorruptHeaderError("bad magic: not a FBSD weight file")
    version = int.from_bytes(data[4:8], "little")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    hlen = int.from_bytes(data[8:12], "little")
    if len(data) < 12 + hlen:
        raise CorruptHeaderError("header extends past end of file")
    try:
        header = json.loads(data[12:12 + hlen].decode())
        config = ModelConfig.from_dict(header["config"])
        directory = header["tensors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptHeaderError(f"unreadable header: {exc}") from exc
    payload = data[12 + hlen:]
    tensors: dict[str, np.ndarray] = {}
    for entry in directory:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4
        if offset + nbytes > len(payload):
            raise TruncatedPayloadError(
                f"tensor {name}: payload ends before its {nbytes} bytes"
            )
        tensors[name] = np.frombuffer(
            payload, dtype="<f4", count=nbytes // 4, offset=offset
        ).reshape(shape).copy()
    return ModelWeights(config, tensors)


def load(path: str) -> ModelWeights:
    with open(path, "rb") as fh:
        return load_bytes(fh.read())


def random_init(config: ModelConfig, seed: int = 0) -> ModelWeights:
    """Deterministic seeded initialization.

    Weights and biases are fan-in-scaled uniform in [-1/sqrt(fan_in),
    1/sqrt(fan_in)] (GRUs use the hidden size); norm scales are 1 and
    shifts 0.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, spec in weight_layout(config).items():
        if spec.kind == "gamma":
            tensors[name] = np.ones(spec.shape, dtype=np.float32)
        elif spec.kind == "beta":
            tensors[name] = np.zeros(spec.shape, dtype=np.float32)
        else:
            bound = 1.0 / np.sqrt(spec.fan_in)
            tensors[name] = rng.uniform(-bound, bound, spec.shape).astype(np.float32)
    return ModelWeights(config, tensors)
