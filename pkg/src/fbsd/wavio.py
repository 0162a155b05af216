"""Minimal RIFF/WAVE reader and writer.

Supports mono PCM 16-bit, PCM 24-bit and IEEE float 32-bit, which covers
the accepted input/output formats. Multichannel files are rejected rather
than silently downmixed.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .dsp import AudioBuffer
from .errors import AudioFormatError

_FMT_PCM = 1
_FMT_FLOAT = 3

ENCODINGS = ("pcm16", "pcm24", "float32")


def _decode(data: bytes, fmt: int, bits: int) -> np.ndarray:
    if fmt == _FMT_PCM and bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(np.float32) / 32768.0
    if fmt == _FMT_PCM and bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8)
        raw = raw[: len(raw) - len(raw) % 3].reshape(-1, 3).astype(np.int32)
        x = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        x = np.where(x & 0x800000, x - 0x1000000, x)
        return x.astype(np.float32) / 8388608.0
    if fmt == _FMT_FLOAT and bits == 32:
        return np.frombuffer(data, dtype="<f4").astype(np.float32)
    raise AudioFormatError(
        f"unsupported WAV encoding: format tag {fmt}, {bits} bits "
        "(accepted: PCM 16/24-bit, float 32-bit)"
    )


def read_wav_bytes(data: bytes) -> AudioBuffer:
    """Decode a WAV file from memory."""
    buf = io.BytesIO(data)
    head = buf.read(12)
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise AudioFormatError("not a RIFF/WAVE file")
    fmt = bits = channels = rate = None
    payload = None
    while True:
        chunk = buf.read(8)
        if len(chunk) < 8:
            break
        cid, size = chunk[:4], struct.unpack("<I", chunk[4:])[0]
        body = buf.read(size)
        if len(body) < size:
            raise AudioFormatError(f"truncated chunk {cid!r}")
        if size % 2:
            buf.read(1)  # chunks are word-aligned
        if cid == b"fmt ":
            if size < 16:
                raise AudioFormatError("fmt chunk too short")
            fmt, channels, rate, _, _, bits = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            payload = body
    if fmt is None or payload is None:
        raise AudioFormatError("missing fmt or data chunk")
    if channels != 1:
        raise AudioFormatError(
            f"only mono WAV is accepted, file has {channels} channels"
        )
    samples = _decode(payload, fmt, bits)
    return AudioBuffer(samples=samples, sample_rate=rate)


def read_wav(path: str) -> AudioBuffer:
    with open(path, "rb") as fh:
        return read_wav_bytes(fh.read())


def write_wav_bytes(audio: AudioBuffer, encoding: str = "float32") -> bytes:
    """Encode mono audio to WAV bytes."""
    x = np.clip(audio.samples, -1.0, 1.0)
    if encoding == "pcm16":
        fmt, bits = _FMT_PCM, 16
        payload = (np.round(x * 32767.0).astype("<i2")).tobytes()
    elif encoding == "pcm24":
        fmt, bits = _FMT_PCM, 24
        ints = np.round(x.astype(np.float64) * 8388607.0).astype(np.int32)
        b = np.empty((len(ints), 3), dtype=np.uint8)
        b[:, 0] = ints & 0xFF
        b[:, 1] = (ints >> 8) & 0xFF
        b[:, 2] = (ints >> 16) & 0xFF
        payload = b.tobytes()
    elif encoding == "float32":
        fmt, bits = _FMT_FLOAT, 32
        payload = x.astype("<f4").tobytes()
    else:
        raise AudioFormatError(f"unknown encoding {encoding!r}, use one of {ENCODINGS}")
    block = bits // 8
    body = io.BytesIO()
    body.write(struct.pack(
        "<HHIIHH", fmt, 1, audio.sample_rate, audio.sample_rate * block, block, bits
    ))
    fmt_chunk = body.getvalue()
    out = io.BytesIO()
    chunks = [(b"fmt ", fmt_chunk)]
    if fmt == _FMT_FLOAT:
        chunks.append((b"fact", struct.pack("<I", len(x))))
    chunks.append((b"data", payload))
    total = 4 + sum(8 + len(c) + (len(c) % 2) for _, c in chunks)
    out.write(b"RIFF" + struct.pack("<I", total) + b"WAVE")
    for cid, c in chunks:
        out.write(cid + struct.pack("<I", len(c)) + c)
        if len(c) % 2:
            out.write(b"\x00")
    return out.getvalue()


def write_wav(path: str, audio: AudioBuffer, encoding: str = "float32") -> None:
    with open(path, "wb") as fh:
        fh.write(write_wav_bytes(audio, encoding))
