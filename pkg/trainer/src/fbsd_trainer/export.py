"""Weight export in the engine's binary format, plus activation dumps.

The format is specified in the engine repository (docs/WEIGHT_FORMAT.md):
magic "FBSD", u32 version, u32 header length, JSON header with the
configuration and a tensor directory, then raw little-endian float32
payloads. GRU parameter names drop torch's layer suffix on export.
"""

from __future__ import annotations

import json

import numpy as np
import torch

from .config import ModelSpec
from .model import ReferenceDenoiser

MAGIC = b"FBSD"
FORMAT_VERSION = 1

_GRU_SUFFIXES = ("weight_ih", "weight_hh", "bias_ih", "bias_hh")


def _export_name(key: str) -> str:
    for stem in _GRU_SUFFIXES:
        if key.endswith(f"{stem}_l0"):
            return key[: -len("_l0")]
    return key


def named_tensors(model: ReferenceDenoiser) -> dict[str, np.ndarray]:
    out = {}
    for key, value in model.state_dict().items():
        out[_export_name(key)] = value.detach().cpu().numpy().astype("<f4")
    return out


def export_bytes(model: ReferenceDenoiser, spec: ModelSpec) -> bytes:
    directory = []
    payload = bytearray()
    for name, arr in named_tensors(model).items():
        directory.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload.extend(np.ascontiguousarray(arr).tobytes())
    header = json.dumps(
        {"config": spec.to_dict(), "tensors": directory}, separators=(",", ":")
    ).encode()
    return (
        MAGIC
        + FORMAT_VERSION.to_bytes(4, "little")
        + len(header).to_bytes(4, "little")
        + header
        + bytes(payload)
    )


def export_weights(model: ReferenceDenoiser, spec: ModelSpec, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(export_bytes(model, spec))


def dump_activations(model: ReferenceDenoiser, frames: np.ndarray, path: str) -> dict:
    """Run one sequence and save per-frame activations next to its input.

    Keys match the engine's trace archives so the two implementations can
    be compared tensor by tensor.
    """
    model.eval()
    trace: dict = {}
    with torch.no_grad():
        mags = torch.from_numpy(np.asarray(frames, np.float32)).unsqueeze(0)
        model(mags, trace=trace)
    arrays = {k: v.numpy() for k, v in trace.items()}
    np.savez(path, frames=np.asarray(frames, np.float32), **arrays)
    return arrays
