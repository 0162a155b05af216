"""Objective evaluation: SI-SDR, SD-SDR and STOI, plus report aggregation.

SI-SDR projects the estimate onto the reference and measures the residual
against the projected target; SD-SDR keeps the same rescaled target but
measures the residual against the unscaled reference, so a pure gain
mismatch is penalized. Both are +inf when the residual vanishes; report
aggregation caps the sentinel at +/-120 dB so means stay finite.

STOI follows the classic short-time objective intelligibility procedure:
resample to 10 kHz, drop silent frames (40 dB below the loudest reference
frame), 256-sample Hann frames zero-padded to a 512-point FFT at 50%
overlap, 15 one-third-octave bands from 150 Hz, clipped and normalized
band correlations over 30-frame (384 ms) segments, averaged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly

from .dsp import AudioBuffer
from .errors import InvalidArgumentError, MetricError

SENTINEL_DB = 120.0  # cap used when aggregating infinite dB values

_STOI_FS = 10000
_STOI_FRAME = 256
_STOI_HOP = 128
_STOI_NFFT = 512
_STOI_BANDS = 15
_STOI_MIN_FREQ = 150.0
_STOI_SEG = 30          # frames per intelligibility segment
_STOI_BETA_DB = -15.0   # lower SDR bound for clipping
_STOI_DYN_RANGE = 40.0  # silent-frame threshold below the loudest frame


def _pair(ref, est) -> tuple[np.ndarray, np.ndarray]:
    r = ref.samples if isinstance(ref, AudioBuffer) else np.asarray(ref)
    e = est.samples if isinstance(est, AudioBuffer) else np.asarray(est)
    r = r.astype(np.float64)
    e = e.astype(np.float64)
    if r.shape != e.shape or r.ndim != 1 or len(r) < 1:
        raise InvalidArgumentError(
            f"signals must be equal-length 1D vectors, got {r.shape} and {e.shape}"
        )
    return r, e


def _projection(ref: np.ndarray, est: np.ndarray) -> tuple[float, float]:
    """(beta, reference energy); beta rescales ref onto est's projection."""
    ref_energy = float(np.dot(ref, ref))
    if ref_energy <= 0.0:
        raise MetricError("reference signal is silent; SDR metrics undefined")
    return float(np.dot(est, ref)) / ref_energy, ref_energy


def _ratio_db(num: float, den: float) -> float:
    if den <= num * 1e-18:
        return math.inf
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def si_sdr(ref, est) -> float:
    """Scale-invariant SDR in dB; +inf when est is a rescaled reference."""
    r, e = _pair(ref, est)
    beta, r_energy = _projection(r, e)
    target_energy = beta * beta * r_energy
    resid = e - beta * r
    return _ratio_db(target_energy, float(np.dot(resid, resid)))


def sd_sdr(ref, est) -> float:
    """Scale-dependent SDR in dB: projected target over the raw residual."""
    r, e = _pair(ref, est)
    beta, r_energy = _projection(r, e)
    target_energy = beta * beta * r_energy
    resid = e - r
    return _ratio_db(target_energy, float(np.dot(resid, resid)))


def snr(ref, est) -> float:
    """Plain signal-to-noise ratio of est against ref, in dB."""
    r, e = _pair(ref, est)
    _, r_energy = _projection(r, e)
    resid = e - r
    return _ratio_db(r_energy, float(np.dot(resid, resid)))


def resample_48k_to_10k(audio: AudioBuffer) -> AudioBuffer:
    """Polyphase 5/24 resampling with the anti-alias low-pass at 5 kHz."""
    if audio.sample_rate != 48000:
        raise InvalidArgumentError(
            f"resample_48k_to_10k expects 48 kHz input, got {audio.sample_rate}"
        )
    y = resample_poly(audio.samples.astype(np.float64), 5, 24)
    return AudioBuffer(samples=y.astype(np.float32), sample_rate=_STOI_FS)


def _stoi_window() -> np.ndarray:
    # interior Hann samples (endpoints excluded), the classic convention
    return np.hanning(_STOI_FRAME + 2)[1:-1]


def _frame(x: np.ndarray) -> np.ndarray:
    n = (len(x) - _STOI_FRAME) // _STOI_HOP + 1
    if n < 1:
        return np.empty((0, _STOI_FRAME))
    idx = np.arange(_STOI_FRAME)[None, :] + _STOI_HOP * np.arange(n)[:, None]
    return x[idx]


def _remove_silent_frames(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop frames 40 dB below the loudest reference frame, then overlap-add."""
    w = _stoi_window()
    xf = _frame(x) * w
    yf = _frame(y) * w
    if len(xf) == 0:
        raise MetricError("signal shorter than one STOI frame")
    energy = 20.0 * np.log10(np.linalg.norm(xf, axis=1) + 1e-300)
    keep = energy > energy.max() - _STOI_DYN_RANGE
    xf, yf = xf[keep], yf[keep]
    out_len = _STOI_FRAME + (len(xf) - 1) * _STOI_HOP if len(xf) else 0
    xs = np.zeros(out_len)
    ys = np.zeros(out_len)
    for i in range(len(xf)):
        lo = i * _STOI_HOP
        xs[lo:lo + _STOI_FRAME] += xf[i]
        ys[lo:lo + _STOI_FRAME] += yf[i]
    return xs, ys


def _third_octave_matrix() -> np.ndarray:
    f = np.linspace(0, _STOI_FS / 2, _STOI_NFFT // 2 + 1)
    k = np.arange(_STOI_BANDS)
    cf = _STOI_MIN_FREQ * 2.0 ** (k / 3.0)
    fl = cf * 2.0 ** (-1.0 / 6.0)
    fr = cf * 2.0 ** (1.0 / 6.0)
    a = np.zeros((_STOI_BANDS, len(f)))
    for i in range(_STOI_BANDS):
        lo = int(np.argmin((f - fl[i]) ** 2))
        hi = int(np.argmin((f - fr[i]) ** 2))
        a[i, lo:hi] = 1.0
    return a


def _band_spectrogram(x: np.ndarray, octave: np.ndarray) -> np.ndarray:
    frames = _frame(x) * _stoi_window()
    spec = np.fft.rfft(frames, n=_STOI_NFFT, axis=1)
    return np.sqrt(octave @ (np.abs(spec.T) ** 2))  # (bands, frames)


def stoi(ref, est, sample_rate: int = 48000) -> float:
    """Short-time objective intelligibility of est against ref."""
    r, e = _pair(ref, est)
    if sample_rate == 48000:
        r = resample_48k_to_10k(AudioBuffer(r.astype(np.float32), 48000)).samples.astype(np.float64)
        e = resample_48k_to_10k(AudioBuffer(e.astype(np.float32), 48000)).samples.astype(np.float64)
    elif sample_rate != _STOI_FS:
        raise InvalidArgumentError(
            f"stoi accepts 48000 or {_STOI_FS} Hz input, got {sample_rate}"
        )
    r, e = _remove_silent_frames(r, e)
    octave = _third_octave_matrix()
    xb = _band_spectrogram(r, octave)
    yb = _band_spectrogram(e, octave)
    n_frames = xb.shape[1]
    if n_frames < _STOI_SEG:
        raise MetricError(
            f"too short for STOI: {n_frames} active frames, need >= {_STOI_SEG}"
        )
    clip_gain = 10.0 ** (-_STOI_BETA_DB / 20.0)
    total = 0.0
    count = 0
    for m in range(_STOI_SEG, n_frames + 1):
        xs = xb[:, m - _STOI_SEG:m]
        ys = yb[:, m - _STOI_SEG:m]
        alpha = np.sqrt(
            (xs ** 2).sum(axis=1, keepdims=True)
            / np.maximum((ys ** 2).sum(axis=1, keepdims=True), 1e-300)
        )
        ys_clip = np.minimum(ys * alpha, xs * (1.0 + clip_gain))
        xm = xs - xs.mean(axis=1, keepdims=True)
        ym = ys_clip - ys_clip.mean(axis=1, keepdims=True)
        denom = np.linalg.norm(xm, axis=1) * np.linalg.norm(ym, axis=1)
        valid = denom > 0
        total += float((np.einsum("bf,bf->b", xm, ym)[valid] / denom[valid]).sum())
        count += xs.shape[0]
    return total / count


# -- reporting ---------------------------------------------------------------


def _cap(value: float) -> float:
    if math.isinf(value):
        return SENTINEL_DB if value > 0 else -SENTINEL_DB
    return min(max(value, -SENTINEL_DB), SENTINEL_DB)


@dataclass
class UtteranceEval:
    name: str
    si_sdr: float
    sd_sdr: float
    stoi: float

    def capped(self) -> dict:
        return {
            "name": self.name,
            "si_sdr": round(_cap(self.si_sdr), 6),
            "sd_sdr": round(_cap(self.sd_sdr), 6),
            "stoi": round(min(max(self.stoi, 0.0), 1.0), 6),
        }


@dataclass
class EvalReport:
    utterances: list[UtteranceEval]

    def aggregate(self) -> dict:
        rows = [u.capped() for u in self.utterances]
        return {
            "utterances": len(rows),
            "si_sdr": float(np.mean([r["si_sdr"] for r in rows])),
            "sd_sdr": float(np.mean([r["sd_sdr"] for r in rows])),
            "stoi": float(np.mean([r["stoi"] for r in rows])),
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(u.capped()) for u in self.utterances]
        lines.append(json.dumps({"aggregate": self.aggregate()}))
        return "\n".join(lines) + "\n"

    def summary_table(self) -> str:
        header = f"{'utterance':<24} {'SI-SDR dB':>10} {'SD-SDR dB':>10} {'STOI':>7}"
        rows = [header, "-" * len(header)]
        for u in self.utterances:
            c = u.capped()
            rows.append(
                f"{u.name:<24} {c['si_sdr']:>10.2f} {c['sd_sdr']:>10.2f} {c['stoi']:>7.4f}"
            )
        agg = self.aggregate()
        rows.append("-" * len(header))
        rows.append(
            f"{'mean':<24} {agg['si_sdr']:>10.2f} {agg['sd_sdr']:>10.2f} {agg['stoi']:>7.4f}"
        )
        return "\n".join(rows)


def evaluate(ref: AudioBuffer, est: AudioBuffer, name: str = "utterance") -> UtteranceEval:
    """All three metrics for one clean/processed pair at 48 kHz."""
    if ref.sample_rate != est.sample_rate:
        raise InvalidArgumentError("sample rates differ between reference and estimate")
    return UtteranceEval(
        name=name,
        si_sdr=si_sdr(ref, est),
        sd_sdr=sd_sdr(ref, est),
        stoi=stoi(ref, est, ref.sample_rate),
    )
